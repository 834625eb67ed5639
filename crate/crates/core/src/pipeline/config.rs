use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kv;
use crate::math;
use crate::model::MaskSpec;

/// Training recipe, one per comparison row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Scratch,
    SslZsda,
    TranslitZsda,
    SupZsda,
    SupZsdaCurriculum,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Scratch,
        Mode::SslZsda,
        Mode::TranslitZsda,
        Mode::SupZsda,
        Mode::SupZsdaCurriculum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Scratch => "scratch",
            Mode::SslZsda => "ssl-zsda",
            Mode::TranslitZsda => "translit-zsda",
            Mode::SupZsda => "sup-zsda",
            Mode::SupZsdaCurriculum => "sup-zsda-curriculum",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown mode `{s}`")))
    }

    /// Modes trained on the true transcripts of the unlabeled corpus.
    pub fn needs_unlabeled_truth(self) -> bool {
        matches!(self, Mode::SupZsda | Mode::SupZsdaCurriculum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Curriculum,
    Seed,
    PseudoLabel,
    Supervised,
    Finetune,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Curriculum => "curriculum",
            Stage::Seed => "seed",
            Stage::PseudoLabel => "pseudo-label",
            Stage::Supervised => "supervised",
            Stage::Finetune => "finetune",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub seed: u64,
    pub curriculum_updates: usize,
    pub seed_updates: usize,
    pub pseudo_label_updates: usize,
    pub finetune_updates: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub ema_decay: f64,
    /// Augmentation for supervised and pseudo-label losses.
    pub mask: MaskSpec,
    /// Masking for the masked cluster prediction objective.
    pub ssl_mask: MaskSpec,
    pub ssl_clusters: usize,
    pub kmeans_iters: usize,
    pub kmeans_fit_cap: usize,
    /// Fraction of fine-tuning updates that train only the new target head.
    pub freeze_fraction: f64,
    pub skip_infeasible: bool,
    /// Loss-curve sampling interval.
    pub log_every: usize,
    /// Interval between independent teacher-update checks.
    pub ema_check_every: usize,
    pub no_curriculum: bool,
    pub no_continuous_pl: bool,
    pub shared_head: bool,
    /// Restrict the self-supervised pool to the labeled corpus.
    pub curriculum_labeled_only: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: Mode::TranslitZsda,
            seed: 1,
            curriculum_updates: 2000,
            seed_updates: 1000,
            pseudo_label_updates: 2000,
            finetune_updates: 2000,
            lr: 3e-4,
            batch_size: 16,
            ema_decay: 0.999,
            mask: MaskSpec::default(),
            ssl_mask: MaskSpec {
                time_mask_prob: 0.065,
                time_span: 10,
                ..MaskSpec::default()
            },
            ssl_clusters: 24,
            kmeans_iters: 25,
            kmeans_fit_cap: 20_000,
            freeze_fraction: 0.125,
            skip_infeasible: true,
            log_every: 50,
            ema_check_every: 50,
            no_curriculum: false,
            no_continuous_pl: false,
            shared_head: false,
            curriculum_labeled_only: false,
        }
    }
}

impl TrainConfig {
    pub fn for_mode(mode: Mode, seed: u64) -> Self {
        Self {
            mode,
            seed,
            ..Self::default()
        }
    }

    /// Total update budget shared by every mode.
    pub fn total_updates(&self) -> usize {
        self.curriculum_updates + self.seed_updates + self.pseudo_label_updates + self.finetune_updates
    }

    /// Stages and update counts actually run for this mode. Every mode spends
    /// the same total; stages a mode lacks hand their budget to the stage that
    /// replaces them.
    pub fn schedule(&self) -> Vec<(Stage, usize)> {
        let (c, s, p, f) = (
            self.curriculum_updates,
            self.seed_updates,
            self.pseudo_label_updates,
            self.finetune_updates,
        );
        let mut out = match self.mode {
            Mode::Scratch => alloc::vec![(Stage::Finetune, c + s + p + f)],
            Mode::SslZsda => alloc::vec![(Stage::Curriculum, c + s + p), (Stage::Finetune, f)],
            Mode::TranslitZsda if self.no_curriculum => {
                alloc::vec![(Stage::Seed, c + s), (Stage::PseudoLabel, p), (Stage::Finetune, f)]
            }
            Mode::TranslitZsda => alloc::vec![
                (Stage::Curriculum, c),
                (Stage::Seed, s),
                (Stage::PseudoLabel, p),
                (Stage::Finetune, f)
            ],
            Mode::SupZsda => alloc::vec![(Stage::Supervised, c + s + p), (Stage::Finetune, f)],
            Mode::SupZsdaCurriculum => {
                alloc::vec![(Stage::Curriculum, c), (Stage::Supervised, s + p), (Stage::Finetune, f)]
            }
        };
        out.retain(|&(stage, n)| n > 0 || stage == Stage::Finetune);
        out
    }

    /// Encoder-frozen updates at the start of fine-tuning.
    pub fn frozen_updates(&self, finetune_updates: usize) -> usize {
        if self.mode == Mode::Scratch {
            return 0;
        }
        math::round(finetune_updates as f64 * self.freeze_fraction) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.ema_decay > 0.0 && self.ema_decay < 1.0) {
            return Err(Error::Config(format!("ema_decay {} outside (0, 1)", self.ema_decay)));
        }
        if !(0.0..=1.0).contains(&self.freeze_fraction) {
            return Err(Error::Config("freeze_fraction must lie in [0, 1]".into()));
        }
        if self.ssl_clusters < 2 {
            return Err(Error::Config("ssl_clusters must be at least 2".into()));
        }
        if self.log_every == 0 || self.ema_check_every == 0 {
            return Err(Error::Config("log_every and ema_check_every must be at least 1".into()));
        }
        if self.mode != Mode::TranslitZsda && (self.no_curriculum || self.no_continuous_pl || self.shared_head) {
            return Err(Error::Config(format!("ablation flags apply to translit-zsda, not {}", self.mode.name())));
        }
        self.mask.validate()?;
        self.ssl_mask.validate()
    }

    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let key = kv::normalize_key(key);
        let k = key.as_str();
        match k {
            "mode" => self.mode = Mode::parse(raw).map_err(|e| Error::Config(e.to_string()))?,
            "seed" => self.seed = kv::value(k, raw)?,
            "curriculum_updates" => self.curriculum_updates = kv::value(k, raw)?,
            "seed_updates" => self.seed_updates = kv::value(k, raw)?,
            "pseudo_label_updates" => self.pseudo_label_updates = kv::value(k, raw)?,
            "finetune_updates" => self.finetune_updates = kv::value(k, raw)?,
            "lr" => self.lr = kv::value(k, raw)?,
            "batch_size" => self.batch_size = kv::value(k, raw)?,
            "ema_decay" => self.ema_decay = kv::value(k, raw)?,
            "time_mask_prob" => self.mask.time_mask_prob = kv::value(k, raw)?,
            "time_span" => self.mask.time_span = kv::value(k, raw)?,
            "channel_mask_prob" => self.mask.channel_mask_prob = kv::value(k, raw)?,
            "channel_span" => self.mask.channel_span = kv::value(k, raw)?,
            "fill_value" => self.mask.fill_value = kv::value(k, raw)?,
            "ssl_time_mask_prob" => self.ssl_mask.time_mask_prob = kv::value(k, raw)?,
            "ssl_time_span" => self.ssl_mask.time_span = kv::value(k, raw)?,
            "ssl_channel_mask_prob" => self.ssl_mask.channel_mask_prob = kv::value(k, raw)?,
            "ssl_channel_span" => self.ssl_mask.channel_span = kv::value(k, raw)?,
            "ssl_clusters" => self.ssl_clusters = kv::value(k, raw)?,
            "kmeans_iters" => self.kmeans_iters = kv::value(k, raw)?,
            "kmeans_fit_cap" => self.kmeans_fit_cap = kv::value(k, raw)?,
            "freeze_fraction" => self.freeze_fraction = kv::value(k, raw)?,
            "skip_infeasible" => self.skip_infeasible = kv::flag(k, raw)?,
            "log_every" => self.log_every = kv::value(k, raw)?,
            "ema_check_every" => self.ema_check_every = kv::value(k, raw)?,
            "no_curriculum" => self.no_curriculum = kv::flag(k, raw)?,
            "no_continuous_pl" => self.no_continuous_pl = kv::flag(k, raw)?,
            "shared_head" => self.shared_head = kv::flag(k, raw)?,
            "curriculum_labeled_only" => self.curriculum_labeled_only = kv::flag(k, raw)?,
            _ => return Err(kv::unknown(k)),
        }
        Ok(())
    }

    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in kv::parse(text)? {
            cfg.set(&k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv_text(&self) -> String {
        let b = |x: bool| if x { "true" } else { "false" };
        let pairs: [(&str, String); 29] = [
            ("mode", self.mode.name().into()),
            ("seed", self.seed.to_string()),
            ("curriculum_updates", self.curriculum_updates.to_string()),
            ("seed_updates", self.seed_updates.to_string()),
            ("pseudo_label_updates", self.pseudo_label_updates.to_string()),
            ("finetune_updates", self.finetune_updates.to_string()),
            ("lr", format!("{:?}", self.lr)),
            ("batch_size", self.batch_size.to_string()),
            ("ema_decay", format!("{:?}", self.ema_decay)),
            ("time_mask_prob", format!("{:?}", self.mask.time_mask_prob)),
            ("time_span", self.mask.time_span.to_string()),
            ("channel_mask_prob", format!("{:?}", self.mask.channel_mask_prob)),
            ("channel_span", self.mask.channel_span.to_string()),
            ("fill_value", format!("{:?}", self.mask.fill_value)),
            ("ssl_time_mask_prob", format!("{:?}", self.ssl_mask.time_mask_prob)),
            ("ssl_time_span", self.ssl_mask.time_span.to_string()),
            ("ssl_channel_mask_prob", format!("{:?}", self.ssl_mask.channel_mask_prob)),
            ("ssl_channel_span", self.ssl_mask.channel_span.to_string()),
            ("ssl_clusters", self.ssl_clusters.to_string()),
            ("kmeans_iters", self.kmeans_iters.to_string()),
            ("kmeans_fit_cap", self.kmeans_fit_cap.to_string()),
            ("freeze_fraction", format!("{:?}", self.freeze_fraction)),
            ("skip_infeasible", b(self.skip_infeasible).into()),
            ("log_every", self.log_every.to_string()),
            ("ema_check_every", self.ema_check_every.to_string()),
            ("no_curriculum", b(self.no_curriculum).into()),
            ("no_continuous_pl", b(self.no_continuous_pl).into()),
            ("shared_head", b(self.shared_head).into()),
            ("curriculum_labeled_only", b(self.curriculum_labeled_only).into()),
        ];
        pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
