use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

/// Time and channel masking policy for augmentation and masked prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskSpec {
    pub time_mask_prob: f64,
    pub time_span: usize,
    pub channel_mask_prob: f64,
    pub channel_span: usize,
    pub fill_value: f64,
}

impl Default for MaskSpec {
    fn default() -> Self {
        Self {
            time_mask_prob: 0.065,
            time_span: 3,
            channel_mask_prob: 0.05,
            channel_span: 2,
            fill_value: 0.0,
        }
    }
}

impl MaskSpec {
    /// No masking at all.
    pub fn none() -> Self {
        Self {
            time_mask_prob: 0.0,
            channel_mask_prob: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok_prob = |p: f64| (0.0..=1.0).contains(&p);
        if !ok_prob(self.time_mask_prob) || !ok_prob(self.channel_mask_prob) {
            return Err(Error::Config("mask probabilities must lie in [0, 1]".into()));
        }
        if self.time_span == 0 || self.channel_span == 0 {
            return Err(Error::Config("mask spans must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Masked {
    pub frames: Matrix,
    /// Frames covered by a time mask.
    pub time_masked: Vec<bool>,
    pub channel_masked: Vec<bool>,
}

impl Masked {
    pub fn masked_frames(&self) -> usize {
        self.time_masked.iter().filter(|&&m| m).count()
    }
}

/// Masks a copy of `frames`.
///
/// Every frame index starts a time mask of `time_span` frames with
/// probability `time_mask_prob`; spans may overlap and are clipped at the end.
/// Channels are masked the same way across all frames.
pub fn mask_augment(frames: &Matrix, spec: &MaskSpec, rng: &mut Rng) -> Masked {
    let (t_len, d) = frames.shape();
    let mut time_masked = vec![false; t_len];
    for t in 0..t_len {
        if rng.bernoulli(spec.time_mask_prob) {
            time_masked[t..(t + spec.time_span).min(t_len)].fill(true);
        }
    }
    let mut channel_masked = vec![false; d];
    for c in 0..d {
        if rng.bernoulli(spec.channel_mask_prob) {
            channel_masked[c..(c + spec.channel_span).min(d)].fill(true);
        }
    }
    let mut out = frames.clone();
    for t in 0..t_len {
        let row = out.row_mut(t);
        if time_masked[t] {
            row.fill(spec.fill_value);
            continue;
        }
        for (x, &m) in row.iter_mut().zip(&channel_masked) {
            if m {
                *x = spec.fill_value;
            }
        }
    }
    Masked {
        frames: out,
        time_masked,
        channel_masked,
    }
}
