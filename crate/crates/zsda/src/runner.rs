//! Training runs on disk: per-stage checkpoints and a line-delimited stage log.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use zsda_core::pipeline::{self, Observer, RunOutput, Stage, StageReport, StageState, TrainConfig, TrainData};

use crate::dataset::DataDir;
use crate::error::{Error, Result};
use crate::format::{write_file, Checkpoint};
use crate::report::config_hash;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "ZSDA_OUT";

/// Output root with fixed `data/`, `ckpt/` and `reports/` subdirectories.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn data(&self) -> PathBuf {
        self.root.join("data")
    }

    pub fn ckpt(&self) -> PathBuf {
        self.root.join("ckpt")
    }

    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn run_dir(&self, run: &str) -> PathBuf {
        self.ckpt().join(run)
    }

    pub fn stage_ckpt(&self, run: &str, cfg: &TrainConfig, stage: Stage) -> PathBuf {
        self.run_dir(run).join(format!("{}.{}.ckpt", cfg.mode.name(), stage.name()))
    }

    pub fn final_ckpt(&self, run: &str, cfg: &TrainConfig) -> PathBuf {
        self.stage_ckpt(run, cfg, Stage::Finetune)
    }

    /// Checkpoint entering fine-tuning, if the mode has a pre-training stage.
    pub fn pretrained_ckpt(&self, run: &str, cfg: &TrainConfig) -> Option<PathBuf> {
        let schedule = cfg.schedule();
        let n = schedule.len();
        (n >= 2).then(|| self.stage_ckpt(run, cfg, schedule[n - 2].0))
    }

    pub fn log(&self, run: &str) -> PathBuf {
        self.reports().join(format!("{run}.log.jsonl"))
    }
}

/// `<mode>[.<ablation>...]-s<seed>`.
pub fn run_name(cfg: &TrainConfig) -> String {
    let mut name = cfg.mode.name().to_string();
    for (on, tag) in [
        (cfg.no_curriculum, "no-curriculum"),
        (cfg.no_continuous_pl, "no-continuous-pl"),
        (cfg.shared_head, "shared-head"),
        (cfg.curriculum_labeled_only, "curriculum-labeled-only"),
    ] {
        if on {
            name.push('.');
            name.push_str(tag);
        }
    }
    format!("{name}-s{}", cfg.seed)
}

/// One line of the stage log.
#[derive(Debug, Clone, Serialize)]
pub struct StageLog<'a> {
    pub run: &'a str,
    pub config_hash: &'a str,
    pub mode: &'a str,
    pub seed: u64,
    pub stage: &'a str,
    pub updates: usize,
    pub final_loss: Option<f64>,
    pub skipped: usize,
    pub ema_checks: usize,
    pub ema_max_deviation: Option<f64>,
    pub loss_curve: &'a [(usize, f64)],
    pub checkpoint: String,
}

struct DiskObserver<'a> {
    layout: &'a Layout,
    run: &'a str,
    cfg: &'a TrainConfig,
    hash: &'a str,
    log: BufWriter<File>,
    log_path: PathBuf,
    progress: bool,
    started: Instant,
    checkpoints: Vec<PathBuf>,
    failure: Option<Error>,
}

impl DiskObserver<'_> {
    fn write(&mut self, path: &Path, ckpt: &Checkpoint, line: &StageLog<'_>) -> Result<()> {
        ckpt.save(path)?;
        let json = serde_json::to_string(line).map_err(|e| Error::format(&self.log_path, e.to_string()))?;
        writeln!(self.log, "{json}")
            .and_then(|_| self.log.flush())
            .map_err(|e| Error::io(&self.log_path, e))
    }
}

impl Observer for DiskObserver<'_> {
    fn update(&mut self, stage: Stage, update: usize, loss: f64) {
        if self.progress && (update + 1).is_multiple_of(self.cfg.log_every.max(1)) {
            eprintln!("run={} stage={} update={} loss={loss:.6}", self.run, stage.name(), update + 1);
        }
    }

    fn stage_start(&mut self, _stage: Stage) {
        self.started = Instant::now();
    }

    fn stage_end(&mut self, report: &mut StageReport, state: &StageState<'_>) -> zsda_core::Result<()> {
        report.wall_seconds = self.started.elapsed().as_secs_f64();
        let path = self.layout.stage_ckpt(self.run, self.cfg, report.stage);
        let ckpt = Checkpoint {
            params: state.params.clone(),
            teacher: state.teacher.cloned(),
            codebook: state.codebook.cloned(),
            meta: format!(
                "config_hash = {}\nrun = {}\nstage = {}\n{}",
                self.hash,
                self.run,
                report.stage.name(),
                self.cfg.to_kv_text()
            ),
        };
        let rel = path
            .strip_prefix(&self.layout.root)
            .unwrap_or(&path)
            .to_string_lossy()
            .into_owned();
        let line = StageLog {
            run: self.run,
            config_hash: self.hash,
            mode: self.cfg.mode.name(),
            seed: self.cfg.seed,
            stage: report.stage.name(),
            updates: report.updates,
            final_loss: report.final_loss(),
            skipped: report.skipped,
            ema_checks: report.ema_checks,
            ema_max_deviation: report.ema_max_deviation,
            loss_curve: &report.loss_curve,
            checkpoint: rel,
        };
        if let Err(e) = self.write(&path, &ckpt, &line) {
            let msg = e.to_string();
            self.failure = Some(e);
            return Err(zsda_core::Error::Training(msg));
        }
        if self.progress {
            eprintln!(
                "run={} stage={} done updates={} skipped={} seconds={:.1}",
                self.run,
                report.stage.name(),
                report.updates,
                report.skipped,
                report.wall_seconds
            );
        }
        self.checkpoints.push(path);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub run: String,
    pub config_hash: String,
    pub output: RunOutput,
    pub checkpoints: Vec<PathBuf>,
}

/// Hash of everything that determines a run's results.
pub fn run_hash(scenario_text: &str, cfg: &TrainConfig) -> String {
    config_hash(&format!("{scenario_text}\n{}", cfg.to_kv_text()))
}

/// Trains `cfg` on the corpus in `data`, writing checkpoints and the stage
/// log under `layout`. Supervised ZSDA modes read the sidecar (`sidecar` or
/// the data directory's default); other modes refuse one.
pub fn train(layout: &Layout, data: &DataDir, cfg: &TrainConfig, sidecar: Option<&Path>, progress: bool) -> Result<TrainOutcome> {
    cfg.validate()?;
    let needs_truth = cfg.mode.needs_unlabeled_truth();
    if !needs_truth {
        if let Some(p) = sidecar {
            return Err(zsda_core::Error::Contract(format!(
                "{} must not read the unlabeled-corpus transcripts ({})",
                cfg.mode.name(),
                p.display()
            ))
            .into());
        }
    }
    let scenario = data.scenario()?;
    let world = zsda_core::synth::World::generate(&scenario)?;
    let labeled = data.load_split("labeled", &world)?;
    let unlabeled = data.load_split("unlabeled", &world)?;
    let truth = if needs_truth {
        let path = sidecar.map(Path::to_path_buf).unwrap_or_else(|| data.sidecar_path());
        if !path.exists() {
            return Err(zsda_core::Error::Contract(format!(
                "{} needs the unlabeled-corpus transcripts, but {} is missing",
                cfg.mode.name(),
                path.display()
            ))
            .into());
        }
        Some(data.load_sidecar(&path, &unlabeled, &world)?)
    } else {
        None
    };

    let run = run_name(cfg);
    let hash = run_hash(&scenario.to_kv_text(), cfg);
    let run_dir = layout.run_dir(&run);
    write_file(&run_dir.join("config.cfg"), cfg.to_kv_text().as_bytes())?;
    let log_path = layout.log(&run);
    write_file(&log_path, b"")?;
    let file = File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    let mut observer = DiskObserver {
        layout,
        run: &run,
        cfg,
        hash: &hash,
        log: BufWriter::new(file),
        log_path: log_path.clone(),
        progress,
        started: Instant::now(),
        checkpoints: Vec::new(),
        failure: None,
    };
    let train_data = TrainData {
        labeled: &labeled,
        unlabeled: &unlabeled,
        unlabeled_truth: truth.as_deref(),
        target_vocab: world.target.vocab_size(),
        source_vocab: world.source.vocab_size(),
    };
    let output = pipeline::run(cfg, &train_data, &mut observer);
    if let Some(e) = observer.failure.take() {
        return Err(e);
    }
    let output = output?;
    let checkpoints = std::mem::take(&mut observer.checkpoints);
    Ok(TrainOutcome {
        run,
        config_hash: hash,
        output,
        checkpoints,
    })
}

/// Skipped utterance-updates summed over a stage log.
pub fn logged_skips(path: &Path) -> Result<usize> {
    let text = crate::format::read_text(path)?;
    let mut total = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::format(path, e.to_string()))?;
        total += v.get("skipped").and_then(|s| s.as_u64()).unwrap_or(0) as usize;
    }
    Ok(total)
}
