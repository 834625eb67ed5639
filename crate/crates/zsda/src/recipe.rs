//! Experiment recipes: one scenario, a list of training runs, and the
//! summary across them.
//!
//! Recipe text is `key = value` lines:
//!
//! ```text
//! scenario = default            # preset name or scenario file, relative to the recipe
//! scenario.noise_ratio = 2      # scenario overrides
//! train.lr = 0.0003             # overrides shared by every run
//! modes = scratch ssl-zsda      # crossed with `seeds`
//! seeds = 1 2 3
//! run = translit-zsda 1 no_curriculum=true
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use zsda_core::kv;
use zsda_core::pipeline::{Mode, TrainConfig};
use zsda_core::synth::ScenarioConfig;

use crate::error::{Error, Result};
use crate::runner::run_name;

#[derive(Debug, Clone, PartialEq)]
pub struct Recipe {
    pub scenario: ScenarioConfig,
    pub runs: Vec<TrainConfig>,
}

fn parse_run(line: &str, shared: &[(String, String)]) -> Result<TrainConfig> {
    let mut parts = line.split_whitespace();
    let (Some(mode), Some(seed)) = (parts.next(), parts.next()) else {
        return Err(Error::usage(format!("run `{line}`: expected `<mode> <seed> [key=value ...]`")));
    };
    let mut cfg = TrainConfig::for_mode(Mode::parse(mode)?, kv::value("seed", seed)?);
    for (k, v) in shared {
        cfg.set(k, v)?;
    }
    for extra in parts {
        let (k, v) = extra
            .split_once('=')
            .ok_or_else(|| Error::usage(format!("run `{line}`: `{extra}` is not key=value")))?;
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

impl Recipe {
    /// Every mode on the default scenario over seeds 1 to 3.
    pub fn standard() -> Self {
        let runs = [1, 2, 3]
            .into_iter()
            .flat_map(|seed| Mode::ALL.into_iter().map(move |m| TrainConfig::for_mode(m, seed)))
            .collect();
        Self {
            scenario: ScenarioConfig::default(),
            runs,
        }
    }

    /// Parses recipe text; scenario file paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let pairs = kv::parse(text)?;
        let mut scenario = ScenarioConfig::default();
        if let Some((_, v)) = pairs.iter().find(|(k, _)| k == "scenario") {
            scenario = match ScenarioConfig::preset(v) {
                Ok(s) => s,
                Err(_) => {
                    let path = base.join(v);
                    ScenarioConfig::from_kv_text(&crate::format::read_text(&path)?)?
                }
            };
        }
        let mut shared = Vec::new();
        let mut modes = Vec::new();
        let mut seeds = Vec::new();
        let mut explicit = Vec::new();
        for (k, v) in &pairs {
            if let Some(key) = k.strip_prefix("scenario.") {
                scenario.set(key, v)?;
            } else if let Some(key) = k.strip_prefix("train.") {
                shared.push((key.to_string(), v.clone()));
            } else {
                match k.as_str() {
                    "scenario" => {}
                    "modes" => modes.extend(v.split_whitespace().map(Mode::parse).collect::<zsda_core::Result<Vec<_>>>()?),
                    "seeds" => {
                        for s in v.split_whitespace() {
                            seeds.push(kv::value::<u64>("seeds", s)?);
                        }
                    }
                    "run" => explicit.push(v.clone()),
                    _ => return Err(kv::unknown(k).into()),
                }
            }
        }
        scenario.validate()?;
        let mut runs = Vec::new();
        for &seed in &seeds {
            for &mode in &modes {
                runs.push(parse_run(&format!("{} {seed}", mode.name()), &shared)?);
            }
        }
        for line in &explicit {
            runs.push(parse_run(line, &shared)?);
        }
        if runs.is_empty() {
            return Err(Error::usage("recipe lists no runs"));
        }
        let mut names: Vec<String> = runs.iter().map(run_name).collect();
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::usage(format!("run `{}` appears twice", w[0])));
        }
        Ok(Self { scenario, runs })
    }
}

/// Run name without its seed suffix; runs sharing a group are averaged.
pub fn run_group(cfg: &TrainConfig) -> String {
    let name = run_name(cfg);
    let suffix = format!("-s{}", cfg.seed);
    name.strip_suffix(&suffix).unwrap_or(&name).to_string()
}

/// Result of one finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub group: String,
    pub seed: u64,
    pub error_rate: f64,
    pub skipped: usize,
    pub config_hash: String,
}

/// Mean error rate per group, in first-seen order.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub group: String,
    pub results: Vec<RunResult>,
}

impl GroupSummary {
    pub fn mean(&self) -> f64 {
        self.results.iter().map(|r| r.error_rate).sum::<f64>() / self.results.len() as f64
    }

    pub fn skipped(&self) -> usize {
        self.results.iter().map(|r| r.skipped).sum()
    }
}

pub fn summarize(results: &[RunResult]) -> Vec<GroupSummary> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<RunResult>> = BTreeMap::new();
    for r in results {
        if !groups.contains_key(&r.group) {
            order.push(r.group.clone());
        }
        groups.entry(r.group.clone()).or_default().push(r.clone());
    }
    order
        .into_iter()
        .map(|g| {
            let mut results = groups.remove(&g).unwrap_or_default();
            results.sort_by_key(|r| r.seed);
            GroupSummary { group: g, results }
        })
        .collect()
}

/// Pass/fail of the headline mode orderings, for the groups present.
pub fn ordering_checks(groups: &[GroupSummary]) -> Vec<(String, bool)> {
    let mean = |name: &str| groups.iter().find(|g| g.group == name).map(GroupSummary::mean);
    let mut out = Vec::new();
    if let (Some(t), Some(s), Some(x)) = (mean("translit-zsda"), mean("ssl-zsda"), mean("scratch")) {
        out.push((
            format!("translit-zsda {t:.2} < ssl-zsda {s:.2} < scratch {x:.2}, gaps > 1"),
            s - t > 1.0 && x - s > 1.0,
        ));
    }
    if let (Some(t), Some(c)) = (mean("translit-zsda"), mean("sup-zsda-curriculum")) {
        out.push((
            format!("sup-zsda-curriculum {c:.2} within 2 of translit-zsda {t:.2}"),
            (c - t).abs() <= 2.0,
        ));
    }
    out
}
