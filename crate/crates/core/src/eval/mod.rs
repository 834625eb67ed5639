//! Error rates, back-transliteration scoring, representation similarity,
//! projections and token histograms.

mod btctc;
mod cca;

pub use btctc::{bt_ctc, bt_ctc_baseline, bt_ctc_score, bt_ctc_topline, BtCtcReport};
pub use cca::{cca_similarity, pca_export, pca_project, CcaReport, PcaPoint, PcaProjection};

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::ctc::{argmax, levenshtein};
use crate::error::{Error, Result};
use crate::model::{transcribe, Head, ModelParams};
use crate::numerics::Matrix;
use crate::synth::Utterance;

/// Corpus-level token error rate with the S/D/I split.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub corpus: String,
    pub utterances: usize,
    /// `100·(S+D+I)/ref_len`.
    pub error_rate: f64,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub ref_len: usize,
}

impl EvalReport {
    pub fn edits(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Accumulates edit counts of `hyps` against `refs`.
pub fn score<R: AsRef<[usize]>, H: AsRef<[usize]>>(corpus: &str, refs: &[R], hyps: &[H]) -> Result<EvalReport> {
    if refs.len() != hyps.len() {
        return Err(Error::Usage(format!("{} references for {} hypotheses", refs.len(), hyps.len())));
    }
    let mut report = EvalReport {
        corpus: corpus.into(),
        utterances: refs.len(),
        error_rate: 0.0,
        substitutions: 0,
        deletions: 0,
        insertions: 0,
        ref_len: 0,
    };
    for (r, h) in refs.iter().zip(hyps) {
        let e = levenshtein(r.as_ref(), h.as_ref());
        report.substitutions += e.substitutions;
        report.deletions += e.deletions;
        report.insertions += e.insertions;
        report.ref_len += e.ref_len;
    }
    report.error_rate = if report.ref_len == 0 {
        0.0
    } else {
        100.0 * report.edits() as f64 / report.ref_len as f64
    };
    Ok(report)
}

/// Greedy-decodes every utterance through `head` and scores it.
pub fn evaluate(params: &ModelParams, utterances: &[Utterance], head: Head, corpus: &str) -> Result<EvalReport> {
    let mut refs = Vec::with_capacity(utterances.len());
    let mut hyps = Vec::with_capacity(utterances.len());
    for u in utterances {
        let Some(r) = &u.transcript else {
            return Err(Error::Usage(format!("`{corpus}` is unlabeled (utterance `{}`)", u.id)));
        };
        refs.push(r.as_slice());
        hyps.push(transcribe(params, &u.frames, head)?.into_vec());
    }
    score(corpus, &refs, &hyps)
}

/// Greedy transcripts of many utterances.
pub fn decode_all(params: &ModelParams, frames: &[&Matrix], head: Head) -> Result<Vec<Vec<usize>>> {
    frames.iter().map(|f| transcribe(params, f, head).map(|t| t.into_vec())).collect()
}

/// Per-frame argmax token (blank included), for labelling projections.
pub fn frame_labels(params: &ModelParams, frames: &Matrix, head: Head) -> Result<Vec<usize>> {
    let cache = params.encode(frames)?;
    let logits = params.head_logits(&cache, head);
    Ok((0..logits.rows()).map(|t| argmax(logits.row(t))).collect())
}

/// Normalized frequency of each token in `0..vocab_size` over all sequences.
/// Index 0 (blank) never occurs in transcripts and stays 0.
pub fn token_distribution<S: AsRef<[usize]>>(seqs: &[S], vocab_size: usize) -> Result<Vec<f64>> {
    let mut counts = vec![0usize; vocab_size];
    for s in seqs {
        for &t in s.as_ref() {
            *counts
                .get_mut(t)
                .ok_or(Error::Vocab { token: t, vocab: vocab_size })? += 1;
        }
    }
    let total: usize = counts.iter().sum();
    Ok(counts
        .into_iter()
        .map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        .collect())
}

/// `½·Σ|p−q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

