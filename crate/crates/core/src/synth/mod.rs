//! Synthetic languages and acoustic domains.
//!
//! A language is a set of graphemes, each with a prototype feature vector
//! and a duration range. A domain is an acoustic transform applied after
//! frame emission (channel mixing, gain, noise, tempo). The same
//! synthesizer generates every corpus and doubles as the text-to-frames
//! model used when scoring transliterations.

mod scenario;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

pub use scenario::{gen_corpus, Corpus, DomainGap, ScenarioConfig, World};

use crate::error::{shape_err, Error, Result};
use crate::math;
use crate::numerics::{axpy, singular_values, Matrix, Rng};

pub const TARGET_LANGUAGE: &str = "tgt";
pub const SOURCE_LANGUAGE: &str = "src";
pub const SOURCE_DOMAIN: &str = "srcdom";
pub const TARGET_DOMAIN: &str = "tgtdom";

#[derive(Debug, Clone, PartialEq)]
pub struct LanguageSpec {
    pub name: String,
    /// Non-blank grapheme symbols; symbol `i` is token `i + 1`.
    pub symbols: Vec<String>,
    /// One prototype row per grapheme.
    pub prototypes: Matrix,
    /// Inclusive `(min, max)` frame duration per grapheme.
    pub durations: Vec<(usize, usize)>,
    /// Unigram weights used when sampling transcripts.
    pub unigram: Vec<f64>,
    /// Per-token distance bound to the reference language's prototypes, when
    /// the language was derived from one.
    pub offset: Option<f64>,
}

impl LanguageSpec {
    /// Vocabulary size including blank.
    pub fn vocab_size(&self) -> usize {
        self.symbols.len() + 1
    }

    pub fn feature_dim(&self) -> usize {
        self.prototypes.cols()
    }

    pub fn prototype(&self, token: usize) -> &[f64] {
        self.prototypes.row(token - 1)
    }

    pub fn symbol(&self, token: usize) -> &str {
        &self.symbols[token - 1]
    }

    pub fn token_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol).map(|i| i + 1)
    }

    /// Space-separated symbols.
    pub fn render(&self, tokens: &[usize]) -> String {
        tokens.iter().map(|&t| self.symbol(t)).collect::<Vec<_>>().join(" ")
    }

    pub fn parse_transcript(&self, text: &str) -> Result<Vec<usize>> {
        text.split_whitespace()
            .map(|s| {
                self.token_of(s)
                    .ok_or_else(|| Error::Usage(format!("symbol `{s}` not in language `{}`", self.name)))
            })
            .collect()
    }

    fn check_tokens(&self, tokens: &[usize]) -> Result<()> {
        if let Some(&bad) = tokens.iter().find(|&&t| t == 0 || t >= self.vocab_size()) {
            return Err(Error::Vocab {
                token: bad,
                vocab: self.vocab_size(),
            });
        }
        Ok(())
    }

    /// Smallest pairwise distance between prototypes.
    pub fn min_separation(&self) -> f64 {
        let n = self.prototypes.rows();
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                best = best.min(distance(self.prototypes.row(i), self.prototypes.row(j)));
            }
        }
        best
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    math::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub name: String,
    /// `d×d` mixing matrix applied to every frame.
    pub channel: Matrix,
    pub gain: f64,
    pub noise_std: f64,
    /// Each emitted frame is repeated this many times.
    pub tempo: usize,
}

impl DomainSpec {
    pub fn clean(name: &str, d: usize, noise_std: f64) -> Self {
        Self {
            name: name.to_string(),
            channel: Matrix::identity(d),
            gain: 1.0,
            noise_std,
            tempo: 1,
        }
    }

    pub fn condition_number(&self) -> f64 {
        let s = singular_values(&self.channel);
        match (s.first(), s.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        }
    }

    pub fn validate(&self, max_condition: f64) -> Result<()> {
        if self.noise_std < 0.0 || self.tempo < 1 {
            return Err(Error::Config(format!("domain `{}`: noise must be ≥ 0 and tempo ≥ 1", self.name)));
        }
        if self.condition_number() > max_condition {
            return Err(Error::Config(format!(
                "domain `{}`: channel condition number {} exceeds {max_condition}",
                self.name,
                self.condition_number()
            )));
        }
        Ok(())
    }

    /// Channel and gain applied to one clean frame.
    pub fn transform(&self, frame: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.channel.rows()];
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.gain * crate::numerics::dot(self.channel.row(r), frame);
        }
        out
    }
}

/// An utterance: frames plus optional transcript, language and domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub frames: Matrix,
    pub transcript: Option<Vec<usize>>,
    pub language: String,
    pub domain: String,
}

/// Frames for `tokens` spoken in `language` through `domain`.
pub fn synthesize(language: &LanguageSpec, tokens: &[usize], domain: &DomainSpec, rng: &mut Rng) -> Result<Matrix> {
    if tokens.is_empty() {
        return Err(Error::Usage("cannot synthesize an empty token sequence".into()));
    }
    language.check_tokens(tokens)?;
    let durations: Vec<usize> = tokens
        .iter()
        .map(|&t| {
            let (lo, hi) = language.durations[t - 1];
            rng.range_inclusive(lo, hi)
        })
        .collect();
    synthesize_with_durations(language, tokens, &durations, domain, rng)
}

/// [`synthesize`] with caller-fixed durations (frames per token before tempo).
pub fn synthesize_with_durations(
    language: &LanguageSpec,
    tokens: &[usize],
    durations: &[usize],
    domain: &DomainSpec,
    rng: &mut Rng,
) -> Result<Matrix> {
    language.check_tokens(tokens)?;
    if durations.len() != tokens.len() {
        return Err(shape_err(
            "synthesize",
            format!("{} durations", tokens.len()),
            format!("{}", durations.len()),
        ));
    }
    let d = language.feature_dim();
    if domain.channel.shape() != (d, d) {
        return Err(shape_err("synthesize", format!("{d}x{d} channel"), format!("{:?}", domain.channel.shape())));
    }
    let total: usize = durations.iter().sum::<usize>() * domain.tempo;
    let mut out = Matrix::zeros(total, d);
    let mut row = 0;
    let mut clean = vec![0.0; d];
    for (&tok, &dur) in tokens.iter().zip(durations) {
        for _ in 0..dur {
            clean.copy_from_slice(language.prototype(tok));
            if domain.noise_std > 0.0 {
                for x in clean.iter_mut() {
                    *x += domain.noise_std * rng.normal();
                }
            }
            let frame = domain.transform(&clean);
            for _ in 0..domain.tempo {
                out.row_mut(row).copy_from_slice(&frame);
                row += 1;
            }
        }
    }
    Ok(out)
}

/// Prototypes with pairwise distance at least `margin`, by rejection.
pub(crate) fn sample_prototypes(n: usize, d: usize, scale: f64, margin: f64, rng: &mut Rng) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut attempts = 0;
    while rows.len() < n {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::Config(format!("cannot place {n} prototypes with margin {margin}")));
        }
        let cand: Vec<f64> = (0..d).map(|_| scale * rng.normal()).collect();
        if rows.iter().all(|r| distance(r, &cand) >= margin) {
            rows.push(cand);
        }
    }
    Matrix::from_vec(n, d, rows.concat())
}

/// Shifts each reference prototype by a random direction of length `offset`.
pub(crate) fn offset_prototypes(reference: &Matrix, offset: f64, rng: &mut Rng) -> Matrix {
    let mut out = reference.clone();
    for r in 0..out.rows() {
        let dir: Vec<f64> = (0..out.cols()).map(|_| rng.normal()).collect();
        let norm = math::sqrt(dir.iter().map(|x| x * x).sum());
        axpy(offset / norm, &dir, out.row_mut(r));
    }
    out
}

