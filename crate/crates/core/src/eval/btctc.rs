use alloc::vec::Vec;

use crate::ctc::ctc_loss;
use crate::error::{Error, Result};
use crate::model::{transcribe, Head, ModelParams};
use crate::numerics::{Matrix, Rng};
use crate::synth::{synthesize, DomainSpec, LanguageSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct BtCtcReport {
    /// Mean CTC loss over scored utterances; `None` when none could be scored.
    pub mean_loss: Option<f64>,
    pub scored: usize,
    /// Empty hypotheses plus resyntheses too short for their reference.
    pub infeasible: usize,
    pub utterances: usize,
}

/// Synthesizes each hypothesis with `language` through `domain` and scores
/// the true transcript under `recognizer`'s source head.
pub fn bt_ctc_score<H: AsRef<[usize]>, R: AsRef<[usize]>>(
    hyps: &[H],
    truth: &[R],
    language: &LanguageSpec,
    recognizer: &ModelParams,
    domain: &DomainSpec,
    rng: &Rng,
) -> Result<BtCtcReport> {
    if hyps.len() != truth.len() {
        return Err(Error::Usage(alloc::format!(
            "{} hypotheses for {} transcripts",
            hyps.len(),
            truth.len()
        )));
    }
    let mut total = 0.0;
    let mut scored = 0;
    let mut infeasible = 0;
    for (i, (h, y)) in hyps.iter().zip(truth).enumerate() {
        let h = h.as_ref();
        if h.is_empty() {
            infeasible += 1;
            continue;
        }
        let x_hat = synthesize(language, h, domain, &mut rng.split(i as u64))?;
        let cache = recognizer.encode(&x_hat)?;
        let logits = recognizer.head_logits(&cache, Head::Source);
        match ctc_loss(&logits, y.as_ref()) {
            Ok(out) => {
                total += out.loss;
                scored += 1;
            }
            Err(Error::Infeasible { .. }) => infeasible += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(BtCtcReport {
        mean_loss: (scored > 0).then(|| total / scored as f64),
        scored,
        infeasible,
        utterances: hyps.len(),
    })
}

/// Back-transliteration score of `model`'s target-head transliterations of
/// `frames`. `truth` is the sidecar and is required.
#[allow(clippy::too_many_arguments)]
pub fn bt_ctc(
    model: &ModelParams,
    frames: &[&Matrix],
    truth: Option<&[Vec<usize>]>,
    recognizer: &ModelParams,
    target_language: &LanguageSpec,
    domain: &DomainSpec,
    rng: &Rng,
) -> Result<BtCtcReport> {
    let truth = truth.ok_or_else(|| Error::Usage("back-transliteration scoring needs the transcripts sidecar".into()))?;
    let hyps = frames
        .iter()
        .map(|f| transcribe(model, f, Head::Target).map(|t| t.into_vec()))
        .collect::<Result<Vec<_>>>()?;
    bt_ctc_score(&hyps, truth, target_language, recognizer, domain, rng)
}

/// The true transcripts rendered by the source-language synthesizer.
pub fn bt_ctc_topline(
    truth: &[Vec<usize>],
    source_language: &LanguageSpec,
    recognizer: &ModelParams,
    domain: &DomainSpec,
    rng: &Rng,
) -> Result<BtCtcReport> {
    bt_ctc_score(truth, truth, source_language, recognizer, domain, rng)
}

/// Transcripts shuffled across utterances, rendered by the target synthesizer.
pub fn bt_ctc_baseline(
    truth: &[Vec<usize>],
    target_language: &LanguageSpec,
    recognizer: &ModelParams,
    domain: &DomainSpec,
    rng: &Rng,
) -> Result<BtCtcReport> {
    let perm = rng.split_named("permute").permutation(truth.len());
    let shuffled: Vec<&[usize]> = perm.iter().map(|&j| truth[j].as_slice()).collect();
    bt_ctc_score(&shuffled, truth, target_language, recognizer, domain, rng)
}
