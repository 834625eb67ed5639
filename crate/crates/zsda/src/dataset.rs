//! Corpus directories: `scenario.cfg`, one manifest per split, frame files
//! under `frames/` and the unlabeled-corpus transcripts in a sidecar.

use std::path::{Path, PathBuf};

use zsda_core::synth::{gen_corpus, Corpus, ScenarioConfig, Utterance, World};

use crate::error::{Error, Result};
use crate::format::{
    parse_manifest, parse_sidecar, read_frames, read_text, render_manifest, render_sidecar, write_file,
    write_frames, ManifestRecord,
};

pub const SPLITS: [&str; 4] = ["labeled", "unlabeled", "dev", "test"];
pub const SCENARIO_FILE: &str = "scenario.cfg";
pub const SIDECAR_FILE: &str = "unlabeled.truth.tsv";

/// Per-split size summary printed after generation.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitStats {
    pub split: String,
    pub language: String,
    pub domain: String,
    pub utterances: usize,
    pub frames: usize,
    pub tokens: usize,
}

pub fn stats_table(stats: &[SplitStats]) -> String {
    let mut out = format!(
        "{:<10} {:<8} {:<8} {:>10} {:>10} {:>8}\n",
        "split", "language", "domain", "utterances", "frames", "tokens"
    );
    for s in stats {
        out.push_str(&format!(
            "{:<10} {:<8} {:<8} {:>10} {:>10} {:>8}\n",
            s.split, s.language, s.domain, s.utterances, s.frames, s.tokens
        ));
    }
    out
}

/// A corpus directory on disk.
#[derive(Debug, Clone)]
pub struct DataDir {
    pub root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn manifest_path(&self, split: &str) -> PathBuf {
        self.root.join(format!("{split}.tsv"))
    }

    pub fn sidecar_path(&self) -> PathBuf {
        self.root.join(SIDECAR_FILE)
    }

    /// Generates the scenario and writes every split.
    pub fn generate(&self, cfg: &ScenarioConfig) -> Result<Vec<SplitStats>> {
        let (world, corpus) = gen_corpus(cfg)?;
        self.write(cfg, &world, &corpus)
    }

    pub fn write(&self, cfg: &ScenarioConfig, world: &World, corpus: &Corpus) -> Result<Vec<SplitStats>> {
        write_file(&self.root.join(SCENARIO_FILE), cfg.to_kv_text().as_bytes())?;
        let mut stats = Vec::new();
        let truth: Vec<(String, String)> = corpus
            .unlabeled_truth
            .iter()
            .map(|(id, t)| (id.clone(), world.source.render(t)))
            .collect();
        let truth_tokens: usize = corpus.unlabeled_truth.iter().map(|(_, t)| t.len()).sum();
        for (split, utts) in SPLITS.iter().zip([&corpus.labeled, &corpus.unlabeled, &corpus.dev, &corpus.test]) {
            let mut records = Vec::with_capacity(utts.len());
            for u in utts.iter() {
                let rel = format!("frames/{}.fram", u.id);
                write_frames(&self.root.join(&rel), &u.frames)?;
                let language = world
                    .language(&u.language)
                    .ok_or_else(|| Error::usage(format!("unknown language `{}`", u.language)))?;
                records.push(ManifestRecord {
                    id: u.id.clone(),
                    path: rel,
                    language: u.language.clone(),
                    domain: u.domain.clone(),
                    transcript: u.transcript.as_ref().map(|t| language.render(t)),
                });
            }
            write_file(&self.manifest_path(split), render_manifest(&records).as_bytes())?;
            let tokens = if *split == "unlabeled" {
                truth_tokens
            } else {
                utts.iter().map(|u| u.transcript.as_ref().map_or(0, Vec::len)).sum()
            };
            stats.push(SplitStats {
                split: split.to_string(),
                language: utts.first().map(|u| u.language.clone()).unwrap_or_default(),
                domain: utts.first().map(|u| u.domain.clone()).unwrap_or_default(),
                utterances: utts.len(),
                frames: utts.iter().map(|u| u.frames.rows()).sum(),
                tokens,
            });
        }
        write_file(&self.sidecar_path(), render_sidecar(&truth).as_bytes())?;
        Ok(stats)
    }

    pub fn scenario(&self) -> Result<ScenarioConfig> {
        let path = self.root.join(SCENARIO_FILE);
        Ok(ScenarioConfig::from_kv_text(&read_text(&path)?)?)
    }

    /// Languages and domains, regenerated from `scenario.cfg`.
    pub fn world(&self) -> Result<World> {
        Ok(World::generate(&self.scenario()?)?)
    }

    /// A split name or a manifest path.
    pub fn resolve(&self, manifest: &str) -> PathBuf {
        if SPLITS.contains(&manifest) {
            self.manifest_path(manifest)
        } else {
            PathBuf::from(manifest)
        }
    }

    /// Reads a manifest with its frames. Paths are relative to the
    /// manifest's directory.
    pub fn load_manifest(&self, path: &Path, world: &World) -> Result<Vec<Utterance>> {
        let records = parse_manifest(&read_text(path)?).map_err(|m| Error::format(path, m))?;
        let base = path.parent().unwrap_or(Path::new("."));
        records
            .into_iter()
            .map(|r| {
                let language = world
                    .language(&r.language)
                    .ok_or_else(|| Error::format(path, format!("`{}`: unknown language `{}`", r.id, r.language)))?;
                let transcript = r.transcript.as_deref().map(|t| language.parse_transcript(t)).transpose()?;
                Ok(Utterance {
                    frames: read_frames(&base.join(&r.path))?,
                    id: r.id,
                    transcript,
                    language: r.language,
                    domain: r.domain,
                })
            })
            .collect()
    }

    pub fn load_split(&self, split: &str, world: &World) -> Result<Vec<Utterance>> {
        self.load_manifest(&self.resolve(split), world)
    }

    /// Transcripts from `path`, ordered like `unlabeled`.
    pub fn load_sidecar(&self, path: &Path, unlabeled: &[Utterance], world: &World) -> Result<Vec<Vec<usize>>> {
        let rows = parse_sidecar(&read_text(path)?).map_err(|m| Error::format(path, m))?;
        let map: std::collections::HashMap<&str, &str> = rows.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        unlabeled
            .iter()
            .map(|u| {
                let text = map
                    .get(u.id.as_str())
                    .ok_or_else(|| Error::format(path, format!("no transcript for `{}`", u.id)))?;
                let language = world
                    .language(&u.language)
                    .ok_or_else(|| Error::format(path, format!("unknown language `{}`", u.language)))?;
                Ok(language.parse_transcript(text)?)
            })
            .collect()
    }
}
