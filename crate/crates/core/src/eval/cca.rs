use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};
use crate::math;
use crate::model::LayerActivations;
use crate::numerics::{singular_values, symmetric_eigen, Matrix, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct CcaReport {
    pub labels: Vec<String>,
    /// Mean canonical correlation per layer; `None` when a side has no
    /// usable variance.
    pub similarity: Vec<Option<f64>>,
    /// Frames pooled per layer.
    pub samples: usize,
    /// Eigenvalue floor applied to each side's covariance, per layer.
    pub epsilon: Vec<(f64, f64)>,
}

impl CcaReport {
    pub fn last(&self) -> Option<f64> {
        self.similarity.last().copied().flatten()
    }
}

fn centered(m: &Matrix) -> Matrix {
    let n = m.rows() as f64;
    let means: Vec<f64> = m.column_sums().into_iter().map(|s| s / n).collect();
    Matrix::from_fn(m.rows(), m.cols(), |r, c| m.get(r, c) - means[c])
}

/// Whitened basis `X·U·diag(1/√max(λ,ε))` over the non-null eigen-directions.
fn whiten(x: &Matrix) -> Result<Option<(Matrix, f64)>> {
    let n1 = (x.rows() - 1) as f64;
    let mut cov = x.t_matmul(x)?;
    cov.scale(1.0 / n1);
    let width = cov.rows();
    let trace: f64 = (0..width).map(|i| cov.get(i, i)).sum();
    if trace <= 0.0 {
        return Ok(None);
    }
    let eps = 1e-6 * trace / width as f64;
    let (vals, vecs) = symmetric_eigen(&cov)?;
    let keep: Vec<usize> = (0..width).filter(|&k| vals[k] > 1e-12 * vals[0]).collect();
    if keep.is_empty() {
        return Ok(None);
    }
    let basis = Matrix::from_fn(width, keep.len(), |r, c| {
        let k = keep[c];
        vecs.get(r, k) / math::sqrt(vals[k].max(eps))
    });
    Ok(Some((x.matmul(&basis)?, eps)))
}

fn layer_similarity(a: &Matrix, b: &Matrix) -> Result<(Option<f64>, (f64, f64))> {
    let (Some((wa, ea)), Some((wb, eb))) = (whiten(&centered(a))?, whiten(&centered(b))?) else {
        return Ok((None, (0.0, 0.0)));
    };
    let mut cross = wa.t_matmul(&wb)?;
    cross.scale(1.0 / (a.rows() - 1) as f64);
    let s = singular_values(&cross);
    let k = wa.cols().min(wb.cols());
    let mean = s.iter().take(k).map(|v| v.clamp(0.0, 1.0)).sum::<f64>() / k as f64;
    Ok((Some(mean), (ea, eb)))
}

/// Per-layer CCA similarity between two activation sets over the same
/// utterances. Frames are pooled and, beyond `cap`, subsampled with the same
/// indices on both sides.
pub fn cca_similarity(a: &[LayerActivations], b: &[LayerActivations], cap: usize, rng: &Rng) -> Result<CcaReport> {
    if a.len() != b.len() || a.is_empty() {
        return Err(shape_err("cca", format!("{} utterances", a.len()), format!("{}", b.len())));
    }
    let layers = a[0].layers.len();
    let mut labels = a[0].labels.clone();
    labels.truncate(layers);
    let mut report = CcaReport {
        labels,
        similarity: Vec::new(),
        samples: 0,
        epsilon: Vec::new(),
    };
    for (ua, ub) in a.iter().zip(b) {
        if ua.layers.len() != layers || ub.layers.len() != layers {
            return Err(shape_err("cca", format!("{layers} layers"), format!("{}/{}", ua.layers.len(), ub.layers.len())));
        }
    }
    let total: usize = a.iter().map(|u| u.layers.first().map_or(0, |m| m.rows())).sum();
    let subsample = (total > cap).then(|| {
        let mut idx = rng.clone().permutation(total);
        idx.truncate(cap);
        idx.sort_unstable();
        idx
    });
    for l in 0..layers {
        let pa = Matrix::vstack(&a.iter().map(|u| &u.layers[l]).collect::<Vec<_>>())?;
        let pb = Matrix::vstack(&b.iter().map(|u| &u.layers[l]).collect::<Vec<_>>())?;
        if pa.rows() != pb.rows() {
            return Err(shape_err("cca", format!("{} frames", pa.rows()), format!("{}", pb.rows())));
        }
        let (pa, pb) = match &subsample {
            Some(idx) if pa.rows() == total => (pa.select_rows(idx), pb.select_rows(idx)),
            _ => (pa, pb),
        };
        if pa.rows() < 2 {
            return Err(Error::Usage("CCA needs at least two frames".into()));
        }
        report.samples = pa.rows();
        let (sim, eps) = layer_similarity(&pa, &pb)?;
        report.similarity.push(sim);
        report.epsilon.push(eps);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    /// `N×2` coordinates.
    pub points: Matrix,
    /// `2×width` orthonormal principal directions.
    pub components: Matrix,
    pub variances: [f64; 2],
    pub total_variance: f64,
}

impl PcaProjection {
    /// Share of total variance kept by the two components.
    pub fn retained(&self) -> f64 {
        if self.total_variance > 0.0 {
            (self.variances[0] + self.variances[1]) / self.total_variance
        } else {
            0.0
        }
    }
}

/// Projects rows of `data` onto their top two principal components. Each
/// component's largest-magnitude entry is made positive.
pub fn pca_project(data: &Matrix) -> Result<PcaProjection> {
    if data.rows() < 3 || data.cols() < 2 {
        return Err(Error::Usage(format!("PCA needs ≥ 3 frames and ≥ 2 dims, got {:?}", data.shape())));
    }
    let x = centered(data);
    let mut cov = x.t_matmul(&x)?;
    cov.scale(1.0 / (x.rows() - 1) as f64);
    let total_variance = (0..cov.rows()).map(|i| cov.get(i, i)).sum();
    let (vals, vecs) = symmetric_eigen(&cov)?;
    let mut components = Matrix::from_fn(2, data.cols(), |k, r| vecs.get(r, k));
    for k in 0..2 {
        let row = components.row_mut(k);
        let pivot = row.iter().copied().fold(0.0, |m: f64, v| if v.abs() > m.abs() { v } else { m });
        if pivot < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let points = x.matmul_t(&components)?;
    Ok(PcaProjection {
        points,
        components,
        variances: [vals[0].max(0.0), vals[1].max(0.0)],
        total_variance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaPoint {
    pub x: f64,
    pub y: f64,
    pub token: usize,
    pub domain: String,
}

/// PCA of one layer pooled over utterances, each frame tagged with its
/// greedy token and its utterance's domain.
pub fn pca_export(layers: &[&Matrix], tokens: &[Vec<usize>], domains: &[&str]) -> Result<(PcaProjection, Vec<PcaPoint>)> {
    if layers.len() != tokens.len() || layers.len() != domains.len() {
        return Err(Error::Usage("PCA export needs one token list and domain per utterance".into()));
    }
    let pooled = Matrix::vstack(layers)?;
    let proj = pca_project(&pooled)?;
    let mut points = Vec::with_capacity(pooled.rows());
    let mut row = 0;
    for ((m, toks), dom) in layers.iter().zip(tokens).zip(domains) {
        if toks.len() != m.rows() {
            return Err(shape_err("pca_export", format!("{} frame labels", m.rows()), format!("{}", toks.len())));
        }
        for &t in toks {
            points.push(PcaPoint {
                x: proj.points.get(row, 0),
                y: proj.points.get(row, 1),
                token: t,
                domain: (*dom).into(),
            });
            row += 1;
        }
    }
    Ok((proj, points))
}
