mod mask {
    use zsda_core::model::*;
    use zsda_core::numerics::{Matrix, Rng};

    fn frames() -> Matrix {
        Matrix::from_fn(12, 6, |t, c| 1.0 + (t * 6 + c) as f64)
    }

    #[test]
    fn zero_probabilities_are_identity() {
        let m = mask_augment(&frames(), &MaskSpec::none(), &mut Rng::new(1));
        assert_eq!(m.frames, frames());
        assert_eq!(m.masked_frames(), 0);
    }

    #[test]
    fn full_time_mask_fills_everything() {
        let spec = MaskSpec {
            time_mask_prob: 1.0,
            time_span: 12,
            fill_value: -7.0,
            ..MaskSpec::default()
        };
        let m = mask_augment(&frames(), &spec, &mut Rng::new(1));
        assert!(m.frames.data().iter().all(|&x| x == -7.0));
    }

    #[test]
    fn deterministic_and_unmasked_cells_untouched() {
        let spec = MaskSpec {
            time_mask_prob: 0.2,
            channel_mask_prob: 0.2,
            fill_value: 0.0,
            ..MaskSpec::default()
        };
        let a = mask_augment(&frames(), &spec, &mut Rng::new(4));
        let b = mask_augment(&frames(), &spec, &mut Rng::new(4));
        assert_eq!(a, b);
        let src = frames();
        for t in 0..12 {
            for c in 0..6 {
                if !a.time_masked[t] && !a.channel_masked[c] {
                    assert_eq!(a.frames.get(t, c), src.get(t, c));
                } else {
                    assert_eq!(a.frames.get(t, c), 0.0);
                }
            }
        }
    }

    #[test]
    fn validation() {
        assert!(MaskSpec::default().validate().is_ok());
        let bad = MaskSpec {
            time_span: 0,
            ..MaskSpec::default()
        };
        assert!(bad.validate().is_err());
        let bad = MaskSpec {
            channel_mask_prob: 1.5,
            ..MaskSpec::default()
        };
        assert!(bad.validate().is_err());
    }
}
