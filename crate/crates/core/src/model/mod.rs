//! Shared encoder with per-language classifier branches and a
//! self-supervised head, masking augmentation, and the EMA teacher.

mod ema;
mod mask;
mod params;
mod ssl;

pub use ema::{ema_update, EmaShadow};
pub use mask::{mask_augment, MaskSpec, Masked};
pub use params::{
    reinit_head, Activation, Affine, ForwardCache, Head, Layer, LayerActivations, ModelConfig, ModelParams,
};
pub use ssl::{kmeans, ssl_loss, ssl_loss_accumulate, ssl_targets, Codebook, SslLoss};

use crate::ctc::{ctc_loss, greedy_decode, TokenSeq};
use crate::error::Result;
use crate::numerics::Matrix;

/// CTC loss of `target` under `head` for (already augmented) `frames`;
/// gradients scaled by `weight` are added to `grads`.
pub fn ctc_accumulate(
    params: &ModelParams,
    frames: &Matrix,
    target: &[usize],
    head: Head,
    grads: &mut ModelParams,
    weight: f64,
    encoder_frozen: bool,
) -> Result<f64> {
    let cache = params.encode(frames)?;
    let logits = params.head_logits(&cache, head);
    let mut out = ctc_loss(&logits, target)?;
    out.grad.scale(weight);
    params.backward(&cache, head, &out.grad, grads, encoder_frozen);
    Ok(out.loss)
}

/// Greedy transcription of `frames` through `head`, without augmentation.
pub fn transcribe(params: &ModelParams, frames: &Matrix, head: Head) -> Result<TokenSeq> {
    let cache = params.encode(frames)?;
    Ok(greedy_decode(&params.head_logits(&cache, head)))
}

