//! CSV reports and the config hash stamped on every row.
//!
//! Column headers:
//! - `eval.csv`: `config_hash,checkpoint,corpus,head,utterances,error_rate,substitutions,deletions,insertions,ref_len`
//! - `cca.csv`: `config_hash,checkpoint_a,checkpoint_b,corpus,layer,similarity,samples,epsilon_a,epsilon_b`
//! - `pca.csv`: `x,y,token,domain,config_hash`
//! - `tokens.csv`: `config_hash,source,token,symbol,frequency`
//! - `bt_ctc.csv`: `config_hash,checkpoint,kind,mean_loss,scored,infeasible,utterances`
//! - `summary.csv`: `mode,runs,mean_error_rate,error_rates,skipped,config_hashes`

use std::fs::OpenOptions;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// First 16 hex digits of the SHA-256 of `text`.
pub fn config_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub config_hash: String,
    pub checkpoint: String,
    pub corpus: String,
    pub head: String,
    pub utterances: usize,
    pub error_rate: f64,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub ref_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcaRow {
    pub config_hash: String,
    pub checkpoint_a: String,
    pub checkpoint_b: String,
    pub corpus: String,
    pub layer: String,
    /// Empty when the layer had no usable directions.
    pub similarity: Option<f64>,
    pub samples: usize,
    pub epsilon_a: f64,
    pub epsilon_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaRow {
    pub x: f64,
    pub y: f64,
    pub token: usize,
    pub domain: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokenRow {
    pub config_hash: String,
    /// `transcripts` or `transliterations`.
    pub source: String,
    pub token: usize,
    pub symbol: String,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BtCtcRow {
    pub config_hash: String,
    pub checkpoint: String,
    /// `model`, `topline` or `baseline`.
    pub kind: String,
    pub mean_loss: Option<f64>,
    pub scored: usize,
    pub infeasible: usize,
    pub utterances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub mode: String,
    pub runs: usize,
    pub mean_error_rate: f64,
    /// `seed:rate` pairs joined by spaces.
    pub error_rates: String,
    pub skipped: usize,
    pub config_hashes: String,
}

/// Appends rows to `path`, writing the header only when the file is new.
pub fn append_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let fresh = !path.exists();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for row in rows {
        w.serialize(row).map_err(|e| Error::format(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Replaces `path` with exactly `rows`.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if path.exists() {
        std::fs::remove_file(path).map_err(|e| Error::io(path, e))?;
    }
    append_csv(path, rows)
}
