//! The four-stage training algorithm and the comparison modes built from it.
//!
//! Stages mutate a [`ModelParams`] in place and return a [`StageReport`].
//! Each stage owns a fresh Adam state. Randomness for update `u` comes from
//! `stage_rng.split(u)`, and batch order from a separate named stream, so
//! reordering work inside an update cannot change results.

mod config;
mod stages;

pub use config::{Mode, Stage, TrainConfig};
pub use stages::{
    ctc_batch, stage_curriculum, stage_finetune, stage_pseudo_label, stage_seed, stage_supervised, train_recognizer,
    BatchSampler,
};

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{ssl_targets, Codebook, EmaShadow, ModelConfig, ModelParams};
use crate::numerics::{Matrix, Rng};
use crate::synth::Utterance;

/// A transcribed utterance borrowed for supervised training.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub frames: &'a Matrix,
    pub target: &'a [usize],
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub stage: Stage,
    pub updates: usize,
    /// `(update, mean loss over the preceding window)`.
    pub loss_curve: Vec<(usize, f64)>,
    /// Utterance-updates skipped (empty or infeasible targets).
    pub skipped: usize,
    /// Filled in by callers that have a clock.
    pub wall_seconds: f64,
    /// Largest deviation seen by the sampled teacher-update checks.
    pub ema_max_deviation: Option<f64>,
    pub ema_checks: usize,
}

impl StageReport {
    pub(crate) fn new(stage: Stage) -> Self {
        Self {
            stage,
            updates: 0,
            loss_curve: Vec::new(),
            skipped: 0,
            wall_seconds: 0.0,
            ema_max_deviation: None,
            ema_checks: 0,
        }
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.loss_curve.last().map(|&(_, l)| l)
    }
}

/// Snapshot handed to [`Observer::stage_end`].
pub struct StageState<'a> {
    pub mode: Mode,
    pub params: &'a ModelParams,
    pub teacher: Option<&'a EmaShadow>,
    pub codebook: Option<&'a Codebook>,
}

/// Progress and checkpoint hooks. All methods default to no-ops.
pub trait Observer {
    fn update(&mut self, _stage: Stage, _update: usize, _loss: f64) {}

    fn stage_start(&mut self, _stage: Stage) {}

    fn stage_end(&mut self, _report: &mut StageReport, _state: &StageState<'_>) -> Result<()> {
        Ok(())
    }
}

impl Observer for () {}

/// Corpora for one run. `unlabeled_truth` is the sidecar; only supervised
/// ZSDA modes may be given it.
#[derive(Debug, Clone, Copy)]
pub struct TrainData<'a> {
    pub labeled: &'a [Utterance],
    pub unlabeled: &'a [Utterance],
    pub unlabeled_truth: Option<&'a [Vec<usize>]>,
    pub target_vocab: usize,
    pub source_vocab: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub params: ModelParams,
    /// Parameters entering fine-tuning.
    pub pretrained: ModelParams,
    /// Teacher at the end of pseudo-labeling, when that stage ran.
    pub teacher: Option<EmaShadow>,
    pub codebook: Option<Codebook>,
    pub reports: Vec<StageReport>,
}

impl RunOutput {
    pub fn skipped(&self) -> usize {
        self.reports.iter().map(|r| r.skipped).sum()
    }
}

/// Borrows every utterance as an [`Example`]; all must be transcribed.
pub fn labeled_examples(utts: &[Utterance]) -> Result<Vec<Example<'_>>> {
    utts.iter()
        .map(|u| match &u.transcript {
            Some(t) => Ok(Example {
                frames: &u.frames,
                target: t,
            }),
            None => Err(Error::Usage(format!("labeled utterance `{}` has no transcript", u.id))),
        })
        .collect()
}

/// Trains one mode end to end.
pub fn run(cfg: &TrainConfig, data: &TrainData<'_>, observer: &mut dyn Observer) -> Result<RunOutput> {
    cfg.validate()?;
    let mode = cfg.mode;
    match (mode.needs_unlabeled_truth(), data.unlabeled_truth.is_some()) {
        (true, false) => {
            return Err(Error::Contract(format!(
                "{} needs the unlabeled-corpus transcripts",
                mode.name()
            )))
        }
        (false, true) => {
            return Err(Error::Contract(format!(
                "{} must not read the unlabeled-corpus transcripts",
                mode.name()
            )))
        }
        _ => {}
    }
    if let Some(u) = data.unlabeled.iter().find(|u| u.transcript.is_some()) {
        return Err(Error::Contract(format!("unlabeled utterance `{}` carries a transcript", u.id)));
    }
    if data.labeled.is_empty() {
        return Err(Error::Config("labeled corpus is empty".into()));
    }
    let labeled = labeled_examples(data.labeled)?;
    let unlabeled: Vec<&Matrix> = data.unlabeled.iter().map(|u| &u.frames).collect();
    let truth_examples: Vec<Example<'_>> = match data.unlabeled_truth {
        Some(truth) => {
            if truth.len() != unlabeled.len() {
                return Err(Error::Usage(format!(
                    "{} transcripts for {} unlabeled utterances",
                    truth.len(),
                    unlabeled.len()
                )));
            }
            unlabeled
                .iter()
                .zip(truth)
                .map(|(&frames, t)| Example { frames, target: t })
                .collect()
        }
        None => Vec::new(),
    };

    let rng = Rng::new(cfg.seed);
    // transliterations are written in the target inventory
    let source_vocab = if mode.needs_unlabeled_truth() {
        data.source_vocab
    } else {
        data.target_vocab
    };
    let model_cfg = ModelConfig::new(
        data.labeled[0].frames.cols(),
        data.target_vocab,
        source_vocab,
        cfg.ssl_clusters,
    );
    let mut params = ModelParams::init(&model_cfg, &mut rng.split_named("init"))?;
    let schedule = cfg.schedule();

    let mut codebook = None;
    let mut pool_targets = Vec::new();
    let mut pool: Vec<&Matrix> = labeled.iter().map(|e| e.frames).collect();
    if schedule.iter().any(|&(s, _)| s == Stage::Curriculum) {
        if !cfg.curriculum_labeled_only {
            pool.extend(unlabeled.iter().copied());
        }
        let (targets, cb) = ssl_targets(
            &pool,
            cfg.ssl_clusters,
            cfg.kmeans_iters,
            cfg.kmeans_fit_cap,
            &mut rng.split_named("kmeans"),
        )?;
        pool_targets = targets;
        codebook = Some(cb);
    }

    let mut reports = Vec::new();
    let mut teacher = None;
    let mut pretrained = params.clone();
    for (i, &(stage, updates)) in schedule.iter().enumerate() {
        let srng = rng.split(i as u64);
        observer.stage_start(stage);
        let mut report = match stage {
            Stage::Curriculum => stage_curriculum(&mut params, &pool, &pool_targets, updates, cfg, &srng, observer)?,
            Stage::Seed => stage_seed(&mut params, &labeled, updates, cfg, &srng, observer)?,
            Stage::PseudoLabel => {
                let (shadow, report) =
                    stage_pseudo_label(&mut params, &labeled, &unlabeled, updates, cfg, &srng, observer)?;
                teacher = Some(shadow);
                report
            }
            Stage::Supervised => {
                stage_supervised(&mut params, &labeled, &truth_examples, updates, cfg, &srng, observer)?
            }
            Stage::Finetune => {
                pretrained = params.clone();
                let frozen = cfg.frozen_updates(updates);
                stage_finetune(&mut params, &labeled, updates, frozen, cfg, &srng, observer)?
            }
        };
        observer.stage_end(
            &mut report,
            &StageState {
                mode,
                params: &params,
                teacher: teacher.as_ref(),
                codebook: codebook.as_ref(),
            },
        )?;
        reports.push(report);
    }
    Ok(RunOutput {
        params,
        pretrained,
        teacher,
        codebook,
        reports,
    })
}

