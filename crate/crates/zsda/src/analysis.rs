//! Measurements over trained parameters: back-transliteration scoring,
//! representation similarity, projections and token distributions.

use zsda_core::eval::{
    bt_ctc, bt_ctc_baseline, bt_ctc_topline, cca_similarity, decode_all, frame_labels, pca_export, token_distribution,
    total_variation, BtCtcReport, CcaReport, PcaPoint, PcaProjection,
};
use zsda_core::model::{Head, LayerActivations, ModelConfig, ModelParams};
use zsda_core::numerics::{Matrix, Rng};
use zsda_core::pipeline::{train_recognizer, Example, TrainConfig};
use zsda_core::synth::{Utterance, World};

use crate::error::Result;

/// Frames pooled for CCA beyond which a fixed subsample is drawn.
pub const CCA_CAP: usize = 4096;

/// Source-language recognizer for back-transliteration scoring, trained on
/// the unlabeled corpus and its true transcripts through the source head.
pub fn source_recognizer(world: &World, unlabeled: &[Utterance], truth: &[Vec<usize>], cfg: &TrainConfig) -> Result<ModelParams> {
    let examples: Vec<Example<'_>> = unlabeled
        .iter()
        .zip(truth)
        .map(|(u, t)| Example {
            frames: &u.frames,
            target: t,
        })
        .collect();
    let model = ModelConfig::new(
        world.target.feature_dim(),
        world.target.vocab_size(),
        world.source.vocab_size(),
        cfg.ssl_clusters,
    );
    let updates = cfg.seed_updates + cfg.pseudo_label_updates;
    let rng = Rng::new(cfg.seed).split_named("recognizer");
    Ok(train_recognizer(&model, &examples, Head::Source, updates, cfg, &rng)?)
}

/// Back-transliteration scores for a model, the topline and the shuffled baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct BtCtcTriplet {
    pub model: BtCtcReport,
    pub topline: BtCtcReport,
    pub baseline: BtCtcReport,
}

pub fn bt_ctc_triplet(
    model: &ModelParams,
    world: &World,
    unlabeled: &[Utterance],
    truth: &[Vec<usize>],
    recognizer: &ModelParams,
    seed: u64,
) -> Result<BtCtcTriplet> {
    let rng = Rng::new(seed).split_named("bt-ctc");
    let domain = world.unlabeled_domain();
    let frames: Vec<&Matrix> = unlabeled.iter().map(|u| &u.frames).collect();
    Ok(BtCtcTriplet {
        model: bt_ctc(model, &frames, Some(truth), recognizer, &world.target, domain, &rng)?,
        topline: bt_ctc_topline(truth, &world.source, recognizer, domain, &rng)?,
        baseline: bt_ctc_baseline(truth, &world.target, recognizer, domain, &rng)?,
    })
}

pub fn activations(params: &ModelParams, utts: &[Utterance]) -> Result<Vec<LayerActivations>> {
    utts.iter()
        .map(|u| Ok(params.forward(&u.frames, Head::Target)?.1))
        .collect()
}

/// Per-layer CCA between two checkpoints' encoders on the same utterances.
pub fn cca_between(a: &ModelParams, b: &ModelParams, utts: &[Utterance], seed: u64) -> Result<CcaReport> {
    let rng = Rng::new(seed).split_named("cca");
    Ok(cca_similarity(&activations(a, utts)?, &activations(b, utts)?, CCA_CAP, &rng)?)
}

/// Last-layer PCA with every frame tagged by its greedy token and domain.
pub fn pca_points(params: &ModelParams, utts: &[Utterance]) -> Result<(PcaProjection, Vec<PcaPoint>)> {
    let acts = activations(params, utts)?;
    let last: Vec<&Matrix> = acts.iter().filter_map(|a| a.layers.last()).collect();
    let tokens = utts
        .iter()
        .map(|u| frame_labels(params, &u.frames, Head::Target))
        .collect::<zsda_core::Result<Vec<_>>>()?;
    let domains: Vec<&str> = utts.iter().map(|u| u.domain.as_str()).collect();
    Ok(pca_export(&last, &tokens, &domains)?)
}

/// Token distributions of the labeled transcripts and of the model's
/// transliterations of the unlabeled corpus, plus their total variation.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenTables {
    pub transcripts: Vec<f64>,
    pub transliterations: Vec<f64>,
    pub total_variation: f64,
}

pub fn token_tables(params: &ModelParams, world: &World, labeled: &[Utterance], unlabeled: &[Utterance]) -> Result<TokenTables> {
    let vocab = world.target.vocab_size();
    let refs: Vec<&[usize]> = labeled.iter().filter_map(|u| u.transcript.as_deref()).collect();
    let frames: Vec<&Matrix> = unlabeled.iter().map(|u| &u.frames).collect();
    let hyps = decode_all(params, &frames, Head::Target)?;
    let transcripts = token_distribution(&refs, vocab)?;
    let transliterations = token_distribution(&hyps, vocab)?;
    let tv = total_variation(&transcripts, &transliterations);
    Ok(TokenTables {
        transcripts,
        transliterations,
        total_variation: tv,
    })
}
