use std::path::Path;

use zsda_core::model::{Codebook, EmaShadow, ModelConfig, ModelParams};
use zsda_core::numerics::Matrix;

use super::{put_f64s, put_string, put_u32, read_bytes, write_file, Reader};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 6] = b"CZSDA1";

/// Model parameters plus optional teacher and codebook.
///
/// Layout (little-endian): magic, `u32` target vocab, source vocab, ssl
/// clusters, feature dim, context radius, layer count and widths, the meta
/// string, then `u32` tensor count and per tensor its name, `u64` length and
/// `f64` values. Teacher tensors carry a `teacher.` prefix; `teacher.decay`
/// is a one-element tensor; the codebook is `codebook` with `u32` rows and
/// columns ahead of the values.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub teacher: Option<EmaShadow>,
    pub codebook: Option<Codebook>,
    /// Free-form `key = value` lines.
    pub meta: String,
}

fn put_tensor(out: &mut Vec<u8>, name: &str, data: &[f64]) {
    put_string(out, name);
    out.extend_from_slice(&(data.len() as u64).to_le_bytes());
    put_f64s(out, data);
}

impl Checkpoint {
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            teacher: None,
            codebook: None,
            meta: String::new(),
        }
    }

    /// Value of `key` in the meta lines.
    pub fn meta_value(&self, key: &str) -> Option<String> {
        zsda_core::kv::parse(&self.meta)
            .ok()?
            .into_iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let cfg = self.params.config();
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        for v in [cfg.target_vocab, cfg.source_vocab, cfg.ssl_clusters, cfg.feature_dim, cfg.context_radius] {
            put_u32(&mut out, v);
        }
        put_u32(&mut out, cfg.hidden.len());
        for &h in &cfg.hidden {
            put_u32(&mut out, h);
        }
        put_string(&mut out, &self.meta);

        let names = self.params.tensor_names();
        let mut count = names.len();
        if let Some(t) = &self.teacher {
            count += t.params.tensor_names().len() + 1;
        }
        if self.codebook.is_some() {
            count += 1;
        }
        put_u32(&mut out, count);
        for (name, data) in names.iter().zip(self.params.tensors()) {
            put_tensor(&mut out, name, data);
        }
        if let Some(t) = &self.teacher {
            for (name, data) in t.params.tensor_names().iter().zip(t.params.tensors()) {
                put_tensor(&mut out, &format!("teacher.{name}"), data);
            }
            put_tensor(&mut out, "teacher.decay", &[t.decay]);
        }
        if let Some(cb) = &self.codebook {
            put_string(&mut out, "codebook");
            put_u32(&mut out, cb.centroids.rows());
            put_u32(&mut out, cb.centroids.cols());
            put_f64s(&mut out, cb.centroids.data());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, String> {
        let mut r = Reader::new(bytes);
        if r.take(6)? != CHECKPOINT_MAGIC {
            return Err("not a CZSDA1 checkpoint".into());
        }
        let target_vocab = r.u32()? as usize;
        let source_vocab = r.u32()? as usize;
        let ssl_clusters = r.u32()? as usize;
        let feature_dim = r.u32()? as usize;
        let context_radius = r.u32()? as usize;
        let layers = r.u32()? as usize;
        if layers > 1024 {
            return Err(format!("implausible layer count {layers}"));
        }
        let hidden = (0..layers).map(|_| r.u32().map(|h| h as usize)).collect::<Result<Vec<_>, _>>()?;
        let meta = r.string()?;
        let cfg = ModelConfig {
            feature_dim,
            context_radius,
            hidden,
            target_vocab,
            source_vocab,
            ssl_clusters,
        };
        let mut params = ModelParams::zeros(&cfg).map_err(|e| e.to_string())?;
        let mut teacher_params: Option<ModelParams> = None;
        let mut decay = None;
        let mut codebook = None;
        let names = params.tensor_names();
        let mut seen = std::collections::BTreeSet::new();

        let count = r.u32()? as usize;
        for _ in 0..count {
            let name = r.string()?;
            if name == "codebook" {
                let rows = r.u32()? as usize;
                let cols = r.u32()? as usize;
                let data = r.f64s(rows.checked_mul(cols).ok_or("length overflow")?)?;
                let centroids = Matrix::from_vec(rows, cols, data).map_err(|e| e.to_string())?;
                codebook = Some(Codebook { centroids });
                continue;
            }
            let len = r.u64()? as usize;
            let data = r.f64s(len)?;
            if name == "teacher.decay" {
                decay = data.first().copied();
                continue;
            }
            let (target, local) = match name.strip_prefix("teacher.") {
                Some(rest) => (teacher_params.get_or_insert_with(|| params.zeros_like()), rest),
                None => (&mut params, name.as_str()),
            };
            let idx = names
                .iter()
                .position(|n| n == local)
                .ok_or_else(|| format!("unknown tensor `{name}`"))?;
            if !seen.insert(name.clone()) {
                return Err(format!("duplicate tensor `{name}`"));
            }
            let slot = &mut target.tensors_mut()[idx];
            if slot.len() != data.len() {
                return Err(format!("tensor `{name}`: expected {} values, found {}", slot.len(), data.len()));
            }
            slot.copy_from_slice(&data);
        }
        if !r.finished() {
            return Err("trailing bytes".into());
        }
        if let Some(missing) = names.iter().find(|n| !seen.contains(*n)) {
            return Err(format!("missing tensor `{missing}`"));
        }
        if teacher_params.is_some() && names.iter().any(|n| !seen.contains(&format!("teacher.{n}"))) {
            return Err("incomplete teacher tensors".into());
        }
        let teacher = match (teacher_params, decay) {
            (Some(params), Some(decay)) => Some(EmaShadow { params, decay }),
            (None, None) => None,
            _ => return Err("teacher tensors and decay must appear together".into()),
        };
        Ok(Self {
            params,
            teacher,
            codebook,
            meta,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_bytes(path)?).map_err(|m| Error::format(path, m))
    }
}
