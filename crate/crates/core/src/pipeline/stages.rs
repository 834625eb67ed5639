use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Example, Observer, Stage, StageReport, TrainConfig};
use crate::ctc::{required_frames, TokenSeq};
use crate::error::{Error, Result};
use crate::math;
use crate::model::{
    ctc_accumulate, mask_augment, ssl_loss_accumulate, transcribe, EmaShadow, Head, MaskSpec, ModelConfig,
    ModelParams,
};
use crate::numerics::{AdamConfig, AdamState, Matrix, Rng};

/// Endless shuffled batches over `0..n`; each epoch is reshuffled.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    order: Vec<usize>,
    pos: usize,
    rng: Rng,
}

impl BatchSampler {
    pub fn new(n: usize, rng: Rng) -> Self {
        let mut s = Self {
            order: (0..n).collect(),
            pos: 0,
            rng,
        };
        s.rng.shuffle(&mut s.order);
        s
    }

    pub fn next_batch(&mut self, size: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        if self.order.is_empty() {
            return out;
        }
        while out.len() < size {
            if self.pos == self.order.len() {
                self.rng.shuffle(&mut self.order);
                self.pos = 0;
            }
            out.push(self.order[self.pos]);
            self.pos += 1;
        }
        out
    }
}

/// Optimizer, trainable mask and loss bookkeeping for one stage.
struct Loop {
    adam: AdamState,
    names: Vec<String>,
    trainable: Vec<bool>,
    report: StageReport,
    window: (f64, usize),
    log_every: usize,
}

impl Loop {
    fn new(stage: Stage, params: &ModelParams, cfg: &TrainConfig, heads: &[Head], encoder: bool) -> Self {
        let adam = AdamState::new(
            AdamConfig {
                lr: cfg.lr,
                ..AdamConfig::default()
            },
            &params.tensor_sizes(),
        );
        let mut l = Self {
            adam,
            names: params.tensor_names(),
            trainable: Vec::new(),
            report: StageReport::new(stage),
            window: (0.0, 0),
            log_every: cfg.log_every,
        };
        l.set_trainable(params, heads, encoder);
        l
    }

    fn set_trainable(&mut self, params: &ModelParams, heads: &[Head], encoder: bool) {
        self.trainable = params
            .tensor_owners()
            .into_iter()
            .map(|owner| match owner {
                None => encoder,
                Some(h) => heads.contains(&h),
            })
            .collect();
    }

    fn apply(&mut self, params: &mut ModelParams, grads: &ModelParams) -> Result<()> {
        let names: Vec<&str> = self.names.iter().map(String::as_str).collect();
        let g = grads.tensors();
        let mut p = params.tensors_mut();
        self.adam.step(&mut p, &g, &names, &self.trainable)
    }

    fn record(&mut self, update: usize, loss: f64, observer: &mut dyn Observer) -> Result<()> {
        if !loss.is_finite() {
            return Err(Error::Training(format!(
                "{} loss became {loss} at update {update}",
                self.report.stage.name()
            )));
        }
        observer.update(self.report.stage, update, loss);
        self.window.0 += loss;
        self.window.1 += 1;
        if (update + 1).is_multiple_of(self.log_every) {
            self.flush(update + 1);
        }
        Ok(())
    }

    fn flush(&mut self, at: usize) {
        if self.window.1 > 0 {
            self.report.loss_curve.push((at, self.window.0 / self.window.1 as f64));
            self.window = (0.0, 0);
        }
    }

    fn finish(mut self, updates: usize) -> StageReport {
        self.flush(updates);
        self.report.updates = updates;
        self.report
    }
}

fn feasible(frames: &Matrix, target: &[usize]) -> bool {
    required_frames(target) <= frames.rows()
}

/// Mean CTC over the feasible members of `batch`, gradients into `grads`.
/// Returns `None` when nothing was feasible.
#[allow(clippy::too_many_arguments)]
pub fn ctc_batch(
    params: &ModelParams,
    batch: &[Example<'_>],
    head: Head,
    mask: &MaskSpec,
    rng: &mut Rng,
    grads: &mut ModelParams,
    encoder_frozen: bool,
    skip_infeasible: bool,
    skipped: &mut usize,
) -> Result<Option<f64>> {
    let mut kept = Vec::with_capacity(batch.len());
    for ex in batch {
        if feasible(ex.frames, ex.target) {
            kept.push(*ex);
        } else if skip_infeasible {
            *skipped += 1;
        } else {
            return Err(Error::Infeasible {
                frames: ex.frames.rows(),
                required: required_frames(ex.target),
            });
        }
    }
    if kept.is_empty() {
        return Ok(None);
    }
    let w = 1.0 / kept.len() as f64;
    let mut total = 0.0;
    for ex in kept {
        let x = mask_augment(ex.frames, mask, rng).frames;
        total += ctc_accumulate(params, &x, ex.target, head, grads, w, encoder_frozen)?;
    }
    Ok(Some(total * w))
}

fn require_feasible(examples: &[Example<'_>], what: &str) -> Result<()> {
    if examples.is_empty() {
        return Err(Error::Config(format!("{what} corpus is empty")));
    }
    if !examples.iter().any(|e| feasible(e.frames, e.target)) {
        return Err(Error::Training(format!("every {what} utterance is CTC-infeasible")));
    }
    Ok(())
}

/// Masked cluster prediction on the pooled corpus; trains the encoder and
/// the SSL head only.
pub fn stage_curriculum(
    params: &mut ModelParams,
    pool: &[&Matrix],
    targets: &[Vec<usize>],
    updates: usize,
    cfg: &TrainConfig,
    rng: &Rng,
    observer: &mut dyn Observer,
) -> Result<StageReport> {
    let mut lp = Loop::new(Stage::Curriculum, params, cfg, &[Head::Ssl], true);
    if updates == 0 {
        return Ok(lp.finish(0));
    }
    if pool.is_empty() || pool.len() != targets.len() {
        return Err(Error::Config(format!(
            "self-supervised pool has {} utterances and {} target sequences",
            pool.len(),
            targets.len()
        )));
    }
    let mut sampler = BatchSampler::new(pool.len(), rng.split_named("batches"));
    let mut grads = params.zeros_like();
    let w = 1.0 / cfg.batch_size as f64;
    for u in 0..updates {
        let mut urng = rng.split(u as u64);
        grads.fill(0.0);
        let mut total = 0.0;
        // utterances without a masked frame count as zero loss
        for j in sampler.next_batch(cfg.batch_size) {
            let out = ssl_loss_accumulate(params, pool[j], &targets[j], &cfg.ssl_mask, &mut urng, &mut grads, w)?;
            if out.masked == 0 {
                lp.report.skipped += 1;
            }
            total += out.loss * w;
        }
        lp.apply(params, &grads)?;
        lp.record(u, total, observer)?;
    }
    Ok(lp.finish(updates))
}

#[allow(clippy::too_many_arguments)]
fn supervised_on_head(
    params: &mut ModelParams,
    examples: &[Example<'_>],
    head: Head,
    stage: Stage,
    updates: usize,
    cfg: &TrainConfig,
    rng: &Rng,
    observer: &mut dyn Observer,
) -> Result<StageReport> {
    let mut lp = Loop::new(stage, params, cfg, &[head], true);
    if updates == 0 {
        return Ok(lp.finish(0));
    }
    require_feasible(examples, "labeled")?;
    let mut sampler = BatchSampler::new(examples.len(), rng.split_named("batches"));
    let mut grads = params.zeros_like();
    for u in 0..updates {
        let mut urng = rng.split(u as u64);
        grads.fill(0.0);
        let batch: Vec<Example<'_>> = sampler.next_batch(cfg.batch_size).into_iter().map(|j| examples[j]).collect();
        let mut skipped = 0;
        let loss = ctc_batch(params, &batch, head, &cfg.mask, &mut urng, &mut grads, false, cfg.skip_infeasible, &mut skipped)?;
        lp.report.skipped += skipped;
        if let Some(loss) = loss {
            lp.apply(params, &grads)?;
            lp.record(u, loss, observer)?;
        }
    }
    Ok(lp.finish(updates))
}

/// Supervised CTC on augmented labeled data through the target head.
pub fn stage_seed(
    params: &mut ModelParams,
    labeled: &[Example<'_>],
    updates: usize,
    cfg: &TrainConfig,
    rng: &Rng,
    observer: &mut dyn Observer,
) -> Result<StageReport> {
    supervised_on_head(params, labeled, Head::Target, Stage::Seed, updates, cfg, rng, observer)
}

/// Fresh parameters trained with supervised CTC on `examples` through
/// `head`; used for the source-language recognizer behind back-transliteration
/// scoring.
pub fn train_recognizer(
    model: &ModelConfig,
    examples: &[Example<'_>],
    head: Head,
    updates: usize,
    cfg: &TrainConfig,
    rng: &Rng,
) -> Result<ModelParams> {
    let mut params = ModelParams::init(model, &mut rng.split_named("init"))?;
    supervised_on_head(&mut params, examples, head, Stage::Supervised, updates, cfg, &rng.split_named("train"), &mut ())?;
    Ok(params)
}

/// Labeled target-language loss plus a pseudo-label loss on the unlabeled
/// corpus, whose transliterations come from an EMA teacher decoding clean
/// input through the target head.
pub fn stage_pseudo_label(
    params: &mut ModelParams,
    labeled: &[Example<'_>],
    unlabeled: &[&Matrix],
    updates: usize,
    cfg: &TrainConfig,
    rng: &Rng,
    observer: &mut dyn Observer,
) -> Result<(EmaShadow, StageReport)> {
    let target_vocab = params.head_target.output_dim();
    let pl_head = if cfg.shared_head { Head::Target } else { Head::Source };
    if !cfg.shared_head {
        params.copy_head(Head::Target, Head::Source)?;
    }
    let mut teacher = EmaShadow::new(params, cfg.ema_decay)?;
    let mut lp = Loop::new(Stage::PseudoLabel, params, cfg, &[Head::Target, pl_head], true);
    if updates == 0 {
        return Ok((teacher, lp.finish(0)));
    }
    require_feasible(labeled, "labeled")?;
    if unlabeled.is_empty() {
        return Err(Error::Config("unlabeled corpus is empty".into()));
    }
    let mut lab_sampler = BatchSampler::new(labeled.len(), rng.split_named("batches"));
    let mut unl_sampler = BatchSampler::new(unlabeled.len(), rng.split_named("unlabeled-batches"));
    let mut grads = params.zeros_like();
    let mut max_dev: f64 = 0.0;
    for u in 0..updates {
        let mut urng = rng.split(u as u64);
        grads.fill(0.0);
        let lab: Vec<Example<'_>> = lab_sampler.next_batch(cfg.batch_size).into_iter().map(|j| labeled[j]).collect();
        let unl = unl_sampler.next_batch(cfg.batch_size);

        let mut translits = Vec::with_capacity(unl.len());
        for &j in &unl {
            let y = transcribe(&teacher.params, unlabeled[j], Head::Target)?;
            // transliterations must stay in the target inventory
            let y = TokenSeq::new(y.into_vec(), target_vocab)
                .map_err(|e| Error::Contract(format!("transliteration outside target vocabulary: {e}")))?;
            if y.is_empty() || !feasible(unlabeled[j], y.tokens()) {
                lp.report.skipped += 1;
                continue;
            }
            translits.push((j, y));
        }
        let pl_batch: Vec<Example<'_>> = translits
            .iter()
            .map(|(j, y)| Example {
                frames: unlabeled[*j],
                target: y.tokens(),
            })
            .collect();

        let mut skipped = 0;
        let sup = ctc_batch(params, &lab, Head::Target, &cfg.mask, &mut urng, &mut grads, false, cfg.skip_infeasible, &mut skipped)?;
        let pl = ctc_batch(params, &pl_batch, pl_head, &cfg.mask, &mut urng, &mut grads, false, true, &mut skipped)?;
        lp.report.skipped += skipped;
        if sup.is_none() && pl.is_none() {
            continue;
        }
        lp.apply(params, &grads)?;
        lp.record(u, sup.unwrap_or(0.0) + pl.unwrap_or(0.0), observer)?;

        if cfg.no_continuous_pl {
            continue;
        }
        let check = u % cfg.ema_check_every == 0 || u + 1 == updates;
        let before = check.then(|| teacher.params.flatten());
        teacher.update(params)?;
        if let Some(before) = before {
            let a = cfg.ema_decay;
            let dev = before
                .iter()
                .zip(params.flatten())
                .zip(teacher.params.flatten())
                .map(|((xi, th), now)| (now - (a * xi + (1.0 - a) * th)).abs())
                .fold(0.0, f64::max);
            max_dev = max_dev.max(dev);
            lp.report.ema_checks += 1;
        }
    }
    if lp.report.ema_checks > 0 {
        lp.report.ema_max_deviation = Some(max_dev);
    }
    Ok((teacher, lp.finish(updates)))
}

/// Supervised pre-training on both corpora with true labels: labeled data
/// through the target head, unlabeled data through the source head.
pub fn stage_supervised(
    params: &mut ModelParams,
    labeled: &[Example<'_>],
    unlabeled: &[Example<'_>],
    updates: usize,
    cfg: &TrainConfig,
    rng: &Rng,
    observer: &mut dyn Observer,
) -> Result<StageReport> {
    let mut lp = Loop::new(Stage::Supervised, params, cfg, &[Head::Target, Head::Source], true);
    if updates == 0 {
        return Ok(lp.finish(0));
    }
    require_feasible(labeled, "labeled")?;
    require_feasible(unlabeled, "unlabeled")?;
    let mut lab_sampler = BatchSampler::new(labeled.len(), rng.split_named("batches"));
    let mut unl_sampler = BatchSampler::new(unlabeled.len(), rng.split_named("unlabeled-batches"));
    let mut grads = params.zeros_like();
    for u in 0..updates {
        let mut urng = rng.split(u as u64);
        grads.fill(0.0);
        let lab: Vec<Example<'_>> = lab_sampler.next_batch(cfg.batch_size).into_iter().map(|j| labeled[j]).collect();
        let unl: Vec<Example<'_>> = unl_sampler.next_batch(cfg.batch_size).into_iter().map(|j| unlabeled[j]).collect();
        let mut skipped = 0;
        let a = ctc_batch(params, &lab, Head::Target, &cfg.mask, &mut urng, &mut grads, false, cfg.skip_infeasible, &mut skipped)?;
        let b = ctc_batch(params, &unl, Head::Source, &cfg.mask, &mut urng, &mut grads, false, cfg.skip_infeasible, &mut skipped)?;
        lp.report.skipped += skipped;
        if a.is_none() && b.is_none() {
            continue;
        }
        lp.apply(params, &grads)?;
        lp.record(u, a.unwrap_or(0.0) + b.unwrap_or(0.0), observer)?;
    }
    Ok(lp.finish(updates))
}

/// Re-initializes the target head and trains on labeled data, with the
/// encoder frozen for the first `frozen` updates.
pub fn stage_finetune(
    params: &mut ModelParams,
    labeled: &[Example<'_>],
    updates: usize,
    frozen: usize,
    cfg: &TrainConfig,
    rng: &Rng,
    observer: &mut dyn Observer,
) -> Result<StageReport> {
    let fan_in = params.head_target.input_dim() as f64;
    params.reinit_head(Head::Target, &mut rng.split_named("head"), 1.0 / math::sqrt(fan_in));
    let frozen = frozen.min(updates);
    let mut lp = Loop::new(Stage::Finetune, params, cfg, &[Head::Target], frozen == 0);
    if updates == 0 {
        return Ok(lp.finish(0));
    }
    require_feasible(labeled, "labeled")?;
    let mut sampler = BatchSampler::new(labeled.len(), rng.split_named("batches"));
    let mut grads = params.zeros_like();
    for u in 0..updates {
        if u == frozen && frozen > 0 {
            lp.set_trainable(params, &[Head::Target], true);
        }
        let mut urng = rng.split(u as u64);
        grads.fill(0.0);
        let batch: Vec<Example<'_>> = sampler.next_batch(cfg.batch_size).into_iter().map(|j| labeled[j]).collect();
        let mut skipped = 0;
        let loss = ctc_batch(
            params,
            &batch,
            Head::Target,
            &cfg.mask,
            &mut urng,
            &mut grads,
            u < frozen,
            cfg.skip_infeasible,
            &mut skipped,
        )?;
        lp.report.skipped += skipped;
        if let Some(loss) = loss {
            lp.apply(params, &grads)?;
            lp.record(u, loss, observer)?;
        }
    }
    Ok(lp.finish(updates))
}
