use proptest::prelude::*;
use zsda_core::ctc::{argmax, brute_force_ctc, ctc_loss, greedy_decode, levenshtein, required_frames, BLANK};
use zsda_core::eval::token_distribution;
use zsda_core::model::{mask_augment, MaskSpec};
use zsda_core::numerics::{log_sum_exp, softmax, Matrix, Rng};

/// Logits for `t` frames over `v` symbols plus a target that fits in them.
fn feasible_instance() -> impl Strategy<Value = (Matrix, Vec<usize>)> {
    (1usize..=6, 2usize..=4).prop_flat_map(|(t, v)| {
        let logits = prop::collection::vec(-3.0f64..3.0, t * v).prop_map(move |d| Matrix::from_vec(t, v, d).unwrap());
        let target = prop::collection::vec(1..v, 0..=3).prop_filter("fits", move |y| required_frames(y) <= t);
        (logits, target)
    })
}

fn logits(max_t: usize, max_v: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_t, 2..=max_v).prop_flat_map(|(t, v)| {
        prop::collection::vec(-4.0f64..4.0, t * v).prop_map(move |d| Matrix::from_vec(t, v, d).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn ctc_matches_enumeration((x, y) in feasible_instance()) {
        let fast = ctc_loss(&x, &y).unwrap().loss;
        let slow = brute_force_ctc(&x, &y).unwrap();
        prop_assert!((fast - slow).abs() <= 1e-9 * slow.abs().max(1.0), "{fast} vs {slow}");
    }

    #[test]
    fn ctc_gradient_rows_sum_to_zero((x, y) in feasible_instance()) {
        let out = ctc_loss(&x, &y).unwrap();
        for t in 0..x.rows() {
            let s: f64 = out.grad.row(t).iter().sum();
            prop_assert!(s.abs() < 1e-9);
        }
    }

    #[test]
    fn greedy_decode_is_collapsed_argmax(x in logits(40, 6)) {
        let path: Vec<usize> = (0..x.rows()).map(|t| argmax(x.row(t))).collect();
        let out = greedy_decode(&x);
        let toks = out.tokens();
        prop_assert!(!toks.contains(&BLANK));
        let mut expect = Vec::new();
        let mut prev = None;
        for &k in &path {
            if Some(k) != prev && k != BLANK {
                expect.push(k);
            }
            prev = Some(k);
        }
        prop_assert_eq!(toks, expect.as_slice());
        // a repeated output token needs a blank between its two runs
        let runs: Vec<usize> = path.iter().enumerate().filter(|&(i, &k)| i == 0 || path[i - 1] != k).map(|(_, &k)| k).collect();
        for w in runs.windows(2) {
            prop_assert!(w[0] != w[1]);
        }
    }

    #[test]
    fn levenshtein_is_symmetric(a in prop::collection::vec(0u8..4, 0..12), b in prop::collection::vec(0u8..4, 0..12)) {
        let ab = levenshtein(&a, &b);
        let ba = levenshtein(&b, &a);
        prop_assert_eq!(ab.edits(), ba.edits());
        prop_assert_eq!(ab.substitutions, ba.substitutions);
        prop_assert_eq!((ab.deletions, ab.insertions), (ba.insertions, ba.deletions));
        prop_assert!(ab.edits() <= a.len().max(b.len()));
        prop_assert!(ab.edits() >= a.len().abs_diff(b.len()));
        prop_assert_eq!(ab.deletions as i64 - ab.insertions as i64, a.len() as i64 - b.len() as i64);
    }

    #[test]
    fn levenshtein_triangle(
        a in prop::collection::vec(0u8..3, 0..8),
        b in prop::collection::vec(0u8..3, 0..8),
        c in prop::collection::vec(0u8..3, 0..8),
    ) {
        let d = |x: &[u8], y: &[u8]| levenshtein(x, y).edits();
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
    }

    #[test]
    fn softmax_is_a_distribution(xs in prop::collection::vec(-50.0f64..50.0, 1..20)) {
        let p = softmax(&xs);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(log_sum_exp(&xs) >= m && log_sum_exp(&xs) <= m + (xs.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn token_distribution_sums_to_one(seqs in prop::collection::vec(prop::collection::vec(1usize..6, 1..10), 1..6)) {
        let p = token_distribution(&seqs, 6).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert_eq!(p[0], 0.0);
    }

    #[test]
    fn masking_leaves_unmasked_cells(seed in any::<u64>(), t in 1usize..30, d in 1usize..8) {
        let x = Matrix::from_fn(t, d, |r, c| 1.0 + (r * d + c) as f64);
        let spec = MaskSpec { time_mask_prob: 0.2, time_span: 3, channel_mask_prob: 0.2, channel_span: 2, fill_value: 0.0 };
        let m = mask_augment(&x, &spec, &mut Rng::new(seed));
        for r in 0..t {
            for c in 0..d {
                if m.time_masked[r] || m.channel_masked[c] {
                    prop_assert_eq!(m.frames.get(r, c), 0.0);
                } else {
                    prop_assert_eq!(m.frames.get(r, c), x.get(r, c));
                }
            }
        }
    }
}
