use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{
    offset_prototypes, sample_prototypes, synthesize, DomainSpec, LanguageSpec, Utterance, SOURCE_DOMAIN,
    SOURCE_LANGUAGE, TARGET_DOMAIN, TARGET_LANGUAGE,
};
use crate::error::{Error, Result};
use crate::kv;
use crate::math;
use crate::numerics::{Matrix, Rng};

/// Preset strength of the train/test acoustic mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainGap {
    Mild,
    Severe,
}

impl DomainGap {
    /// Scale of the random perturbation added to the identity channel.
    pub fn channel_perturbation(self) -> f64 {
        match self {
            DomainGap::Mild => 0.25,
            DomainGap::Severe => 0.8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DomainGap::Mild => "mild",
            DomainGap::Severe => "severe",
        }
    }
}

/// Everything needed to regenerate a corpus bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub feature_dim: usize,
    pub graphemes: usize,
    pub prototype_scale: f64,
    pub margin: f64,
    /// Close-language prototype offset as a fraction of `margin`.
    pub close_offset_ratio: f64,
    /// Source language drawn independently of the target language.
    pub distant: bool,
    /// Unlabeled source-language data recorded in the source domain.
    pub cross_domain: bool,
    pub gap: DomainGap,
    /// Scale of the off-identity channel entries (times `1/√d`); set from
    /// `gap` unless overridden.
    pub channel_perturbation: f64,
    pub base_noise: f64,
    pub noise_ratio: f64,
    pub target_gain: f64,
    pub target_tempo: usize,
    pub max_condition: f64,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub n_dev: usize,
    pub n_test: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub dur_min: usize,
    pub dur_max: usize,
    pub zipf: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            seed: 7,
            feature_dim: 16,
            graphemes: 12,
            prototype_scale: 1.0,
            margin: 3.0,
            close_offset_ratio: 0.3,
            distant: false,
            cross_domain: false,
            gap: DomainGap::Severe,
            channel_perturbation: DomainGap::Severe.channel_perturbation(),
            base_noise: 0.3,
            noise_ratio: 2.0,
            target_gain: 0.8,
            target_tempo: 2,
            max_condition: 10.0,
            n_labeled: 2000,
            n_unlabeled: 2000,
            n_dev: 200,
            n_test: 400,
            min_len: 3,
            max_len: 8,
            dur_min: 2,
            dur_max: 4,
            zipf: 0.8,
        }
    }
}

impl ScenarioConfig {
    /// Named presets: `default`/`severe`, `mild`, `distant`, `cross-domain`.
    pub fn preset(name: &str) -> Result<Self> {
        let mut cfg = Self::default();
        match name {
            "default" | "severe" => {}
            "mild" => {
                cfg.gap = DomainGap::Mild;
                cfg.channel_perturbation = DomainGap::Mild.channel_perturbation();
            }
            "distant" => cfg.distant = true,
            "cross-domain" | "cross_domain" => cfg.cross_domain = true,
            other => return Err(Error::Config(format!("unknown scenario `{other}`"))),
        }
        cfg.name = name.to_string();
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let key = kv::normalize_key(key);
        match key.as_str() {
            "name" => self.name = raw.to_string(),
            "scenario" => {
                let seed = self.seed;
                *self = Self::preset(raw)?;
                self.seed = seed;
            }
            "seed" => self.seed = kv::value(&key, raw)?,
            "feature_dim" => self.feature_dim = kv::value(&key, raw)?,
            "graphemes" => self.graphemes = kv::value(&key, raw)?,
            "prototype_scale" => self.prototype_scale = kv::value(&key, raw)?,
            "margin" => self.margin = kv::value(&key, raw)?,
            "close_offset_ratio" => self.close_offset_ratio = kv::value(&key, raw)?,
            "distant" => self.distant = kv::flag(&key, raw)?,
            "cross_domain" => self.cross_domain = kv::flag(&key, raw)?,
            "gap" => {
                self.gap = match raw {
                    "mild" => DomainGap::Mild,
                    "severe" => DomainGap::Severe,
                    _ => return Err(Error::Config(format!("gap must be mild or severe, got `{raw}`"))),
                };
                self.channel_perturbation = self.gap.channel_perturbation();
            }
            "channel_perturbation" => self.channel_perturbation = kv::value(&key, raw)?,
            "base_noise" => self.base_noise = kv::value(&key, raw)?,
            "noise_ratio" => self.noise_ratio = kv::value(&key, raw)?,
            "target_gain" => self.target_gain = kv::value(&key, raw)?,
            "target_tempo" => self.target_tempo = kv::value(&key, raw)?,
            "max_condition" => self.max_condition = kv::value(&key, raw)?,
            "n_labeled" => self.n_labeled = kv::value(&key, raw)?,
            "n_unlabeled" => self.n_unlabeled = kv::value(&key, raw)?,
            "n_dev" => self.n_dev = kv::value(&key, raw)?,
            "n_test" => self.n_test = kv::value(&key, raw)?,
            "min_len" => self.min_len = kv::value(&key, raw)?,
            "max_len" => self.max_len = kv::value(&key, raw)?,
            "dur_min" => self.dur_min = kv::value(&key, raw)?,
            "dur_max" => self.dur_max = kv::value(&key, raw)?,
            "zipf" => self.zipf = kv::value(&key, raw)?,
            _ => return Err(kv::unknown(&key)),
        }
        Ok(())
    }

    /// Parses `key = value` text on top of the defaults. A `scenario` key,
    /// if present, is applied first.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let pairs = kv::parse(text)?;
        let mut cfg = Self::default();
        if let Some((_, v)) = pairs.iter().find(|(k, _)| k == "scenario") {
            cfg = Self::preset(v)?;
        }
        for (k, v) in pairs.iter().filter(|(k, _)| k != "scenario") {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv_text(&self) -> String {
        let b = |x: bool| if x { "true" } else { "false" };
        format!(
            "name = {}\nseed = {}\nfeature_dim = {}\ngraphemes = {}\nprototype_scale = {}\nmargin = {}\n\
             close_offset_ratio = {}\ndistant = {}\ncross_domain = {}\ngap = {}\nchannel_perturbation = {}\n\
             base_noise = {}\n\
             noise_ratio = {}\ntarget_gain = {}\ntarget_tempo = {}\nmax_condition = {}\nn_labeled = {}\n\
             n_unlabeled = {}\nn_dev = {}\nn_test = {}\nmin_len = {}\nmax_len = {}\ndur_min = {}\n\
             dur_max = {}\nzipf = {}\n",
            self.name,
            self.seed,
            self.feature_dim,
            self.graphemes,
            self.prototype_scale,
            self.margin,
            self.close_offset_ratio,
            b(self.distant),
            b(self.cross_domain),
            self.gap.name(),
            self.channel_perturbation,
            self.base_noise,
            self.noise_ratio,
            self.target_gain,
            self.target_tempo,
            self.max_condition,
            self.n_labeled,
            self.n_unlabeled,
            self.n_dev,
            self.n_test,
            self.min_len,
            self.max_len,
            self.dur_min,
            self.dur_max,
            self.zipf,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(Error::Config("need 1 ≤ min_len ≤ max_len".into()));
        }
        if self.dur_min == 0 || self.dur_min > self.dur_max {
            return Err(Error::Config("need 1 ≤ dur_min ≤ dur_max".into()));
        }
        if self.graphemes < 2 || self.feature_dim == 0 {
            return Err(Error::Config("need at least two graphemes and one feature".into()));
        }
        if self.target_tempo == 0 || self.base_noise < 0.0 || self.noise_ratio < 0.0 || self.channel_perturbation < 0.0 {
            return Err(Error::Config("tempo must be ≥ 1; noise and channel perturbation ≥ 0".into()));
        }
        Ok(())
    }

    /// Distance bound between close-language and target prototypes.
    pub fn close_offset(&self) -> f64 {
        self.close_offset_ratio * self.margin
    }
}

/// Languages and domains of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub target: LanguageSpec,
    pub source: LanguageSpec,
    pub source_domain: DomainSpec,
    pub target_domain: DomainSpec,
    pub cross_domain: bool,
}

impl World {
    pub fn generate(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let root = Rng::new(cfg.seed);
        let mut rng = root.split_named("world");
        let (d, n) = (cfg.feature_dim, cfg.graphemes);

        let target_protos = sample_prototypes(n, d, cfg.prototype_scale, cfg.margin, &mut rng)?;
        let offset = cfg.close_offset();
        let source_protos = if cfg.distant {
            // fresh draw; reject until every token is beyond the close bound
            let mut attempts = 0;
            loop {
                attempts += 1;
                let p = sample_prototypes(n, d, cfg.prototype_scale, cfg.margin, &mut rng)?;
                let far = (0..n).all(|i| super::distance(p.row(i), target_protos.row(i)) > offset);
                if far {
                    break p;
                }
                if attempts > 1000 {
                    return Err(Error::Config("cannot draw a distant language".into()));
                }
            }
        } else {
            offset_prototypes(&target_protos, offset, &mut rng)
        };

        let target = make_language(TARGET_LANGUAGE, target_protos, "abcdefghijklmnopqrstuvwxyz", cfg, None, &mut rng);
        let mut source = make_language(
            SOURCE_LANGUAGE,
            source_protos,
            "ABCDEFGHIJKLMNOPQRSTUVWXYZ",
            cfg,
            (!cfg.distant).then_some(offset),
            &mut rng,
        );
        // a close language shares the target's timing as well as its sounds
        if !cfg.distant {
            source.durations = target.durations.clone();
        }

        let source_domain = DomainSpec::clean(SOURCE_DOMAIN, d, cfg.base_noise);
        let delta = cfg.channel_perturbation / math::sqrt(d as f64);
        let mut attempts = 0;
        let target_domain = loop {
            attempts += 1;
            let channel = Matrix::from_fn(d, d, |r, c| if r == c { 1.0 } else { 0.0 } + delta * rng.normal());
            let dom = DomainSpec {
                name: TARGET_DOMAIN.into(),
                channel,
                gain: cfg.target_gain,
                noise_std: cfg.base_noise * cfg.noise_ratio,
                tempo: cfg.target_tempo,
            };
            if dom.validate(cfg.max_condition).is_ok() {
                break dom;
            }
            if attempts > 1000 {
                return Err(Error::Config("cannot draw a well-conditioned channel".into()));
            }
        };
        Ok(Self {
            target,
            source,
            source_domain,
            target_domain,
            cross_domain: cfg.cross_domain,
        })
    }

    /// Domain in which the unlabeled source-language data is recorded.
    pub fn unlabeled_domain(&self) -> &DomainSpec {
        if self.cross_domain {
            &self.source_domain
        } else {
            &self.target_domain
        }
    }

    pub fn language(&self, name: &str) -> Option<&LanguageSpec> {
        [&self.target, &self.source].into_iter().find(|l| l.name == name)
    }

    pub fn domain(&self, name: &str) -> Option<&DomainSpec> {
        [&self.source_domain, &self.target_domain].into_iter().find(|d| d.name == name)
    }
}

fn make_language(
    name: &str,
    prototypes: Matrix,
    alphabet: &str,
    cfg: &ScenarioConfig,
    offset: Option<f64>,
    rng: &mut Rng,
) -> LanguageSpec {
    let n = prototypes.rows();
    let symbols = alphabet.chars().cycle().take(n).enumerate().map(|(i, c)| {
        if i < 26 {
            c.to_string()
        } else {
            format!("{c}{}", i / 26)
        }
    });
    let durations = (0..n)
        .map(|_| (cfg.dur_min, rng.range_inclusive(cfg.dur_min, cfg.dur_max)))
        .collect();
    // Zipf weights over a language-specific rank order
    let ranks = rng.permutation(n);
    let unigram = ranks
        .iter()
        .map(|&r| 1.0 / math::exp(cfg.zipf * math::ln(r as f64 + 1.0)))
        .collect();
    LanguageSpec {
        name: name.into(),
        symbols: symbols.collect(),
        prototypes,
        durations,
        unigram,
        offset,
    }
}

/// Generated utterances for all four splits.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    /// Target language, source domain, transcribed.
    pub labeled: Vec<Utterance>,
    /// Source language, untranscribed.
    pub unlabeled: Vec<Utterance>,
    /// Ground truth for `unlabeled`, kept apart from it.
    pub unlabeled_truth: Vec<(String, Vec<usize>)>,
    /// Target language, target domain.
    pub dev: Vec<Utterance>,
    pub test: Vec<Utterance>,
}

fn sample_tokens(lang: &LanguageSpec, cfg: &ScenarioConfig, rng: &mut Rng) -> Vec<usize> {
    let len = rng.range_inclusive(cfg.min_len, cfg.max_len);
    let mut out: Vec<usize> = Vec::with_capacity(len);
    while out.len() < len {
        let t = rng.weighted(&lang.unigram) + 1;
        if out.last() != Some(&t) {
            out.push(t);
        }
    }
    out
}

fn make_split(
    prefix: &str,
    count: usize,
    lang: &LanguageSpec,
    domain: &DomainSpec,
    cfg: &ScenarioConfig,
    stream: &Rng,
) -> Result<Vec<Utterance>> {
    (0..count)
        .map(|i| {
            let mut rng = stream.split(i as u64);
            let tokens = sample_tokens(lang, cfg, &mut rng);
            let frames = synthesize(lang, &tokens, domain, &mut rng)?;
            Ok(Utterance {
                id: format!("{prefix}-{i:05}"),
                frames,
                transcript: Some(tokens),
                language: lang.name.clone(),
                domain: domain.name.clone(),
            })
        })
        .collect()
}

/// Builds the world and all splits for a scenario.
pub fn gen_corpus(cfg: &ScenarioConfig) -> Result<(World, Corpus)> {
    let world = World::generate(cfg)?;
    let root = Rng::new(cfg.seed);
    let labeled = make_split("lab", cfg.n_labeled, &world.target, &world.source_domain, cfg, &root.split_named("labeled"))?;
    let mut unlabeled = make_split(
        "unl",
        cfg.n_unlabeled,
        &world.source,
        world.unlabeled_domain(),
        cfg,
        &root.split_named("unlabeled"),
    )?;
    let unlabeled_truth = unlabeled
        .iter_mut()
        .map(|u| (u.id.clone(), u.transcript.take().unwrap_or_default()))
        .collect();
    let dev = make_split("dev", cfg.n_dev, &world.target, &world.target_domain, cfg, &root.split_named("dev"))?;
    let test = make_split("test", cfg.n_test, &world.target, &world.target_domain, cfg, &root.split_named("test"))?;
    Ok((
        world,
        Corpus {
            labeled,
            unlabeled,
            unlabeled_truth,
            dev,
            test,
        },
    ))
}
