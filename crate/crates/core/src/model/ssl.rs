//! Masked prediction of discrete frame clusters.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{mask_augment, Head, MaskSpec, ModelParams};
use crate::error::{Error, Result};
use crate::math;
use crate::numerics::{log_softmax_in_place, Matrix, Rng};

/// k-means centroids over raw frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub centroids: Matrix,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.centroids.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.rows() == 0
    }

    /// Nearest centroid; ties go to the lower index.
    pub fn assign(&self, frame: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for k in 0..self.centroids.rows() {
            let d = sq_dist(frame, self.centroids.row(k));
            if d < best.0 {
                best = (d, k);
            }
        }
        best.1
    }

    pub fn label(&self, frames: &Matrix) -> Vec<usize> {
        (0..frames.rows()).map(|t| self.assign(frames.row(t))).collect()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's k-means with k-means++ seeding over the rows of `data`.
pub fn kmeans(data: &Matrix, k: usize, max_iters: usize, rng: &mut Rng) -> Result<Codebook> {
    let (n, d) = data.shape();
    if k == 0 {
        return Err(Error::Clustering("need at least one cluster".into()));
    }
    let mut distinct = BTreeSet::new();
    for r in 0..n {
        distinct.insert(data.row(r).iter().map(|x| x.to_bits()).collect::<Vec<u64>>());
        if distinct.len() >= k {
            break;
        }
    }
    if distinct.len() < k {
        return Err(Error::Clustering(format!("{k} clusters but only {} distinct frames", distinct.len())));
    }

    let mut centroids = Matrix::zeros(k, d);
    centroids.row_mut(0).copy_from_slice(data.row(rng.below(n)));
    let mut nearest: Vec<f64> = (0..n).map(|r| sq_dist(data.row(r), centroids.row(0))).collect();
    for c in 1..k {
        let pick = if nearest.iter().sum::<f64>() > 0.0 {
            rng.weighted(&nearest)
        } else {
            rng.below(n)
        };
        centroids.row_mut(c).copy_from_slice(data.row(pick));
        for r in 0..n {
            nearest[r] = nearest[r].min(sq_dist(data.row(r), centroids.row(c)));
        }
    }

    let mut codebook = Codebook { centroids };
    let mut labels = vec![usize::MAX; n];
    for _ in 0..max_iters {
        let mut changed = false;
        for r in 0..n {
            let a = codebook.assign(data.row(r));
            if a != labels[r] {
                labels[r] = a;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = Matrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for r in 0..n {
            counts[labels[r]] += 1;
            crate::numerics::axpy(1.0, data.row(r), sums.row_mut(labels[r]));
        }
        for c in 0..k {
            // an emptied cluster keeps its previous centroid
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dst, s) in codebook.centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            }
        }
    }
    Ok(codebook)
}

/// Frame-level cluster ids for every utterance, from a codebook fitted on
/// the pooled frames (subsampled to at most `fit_cap` rows).
pub fn ssl_targets(
    utterances: &[&Matrix],
    k: usize,
    max_iters: usize,
    fit_cap: usize,
    rng: &mut Rng,
) -> Result<(Vec<Vec<usize>>, Codebook)> {
    if k < 1 {
        return Err(Error::Clustering("need at least one cluster".into()));
    }
    let pooled = Matrix::vstack(utterances)?;
    if pooled.rows() < k {
        return Err(Error::Clustering(format!("{} frames for {k} clusters", pooled.rows())));
    }
    let fit = if pooled.rows() > fit_cap {
        let mut idx = rng.permutation(pooled.rows());
        idx.truncate(fit_cap);
        idx.sort_unstable();
        pooled.select_rows(&idx)
    } else {
        pooled
    };
    let codebook = kmeans(&fit, k, max_iters, rng)?;
    let labels = utterances.iter().map(|u| codebook.label(u)).collect();
    Ok((labels, codebook))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SslLoss {
    pub loss: f64,
    /// Number of time-masked frames the loss averaged over; zero means the
    /// utterance contributed nothing.
    pub masked: usize,
}

/// Masked cluster prediction: mask, run the SSL head, mean cross-entropy over
/// time-masked frames. Gradients, scaled by `weight`, are added to `grads`.
pub fn ssl_loss_accumulate(
    params: &ModelParams,
    frames: &Matrix,
    targets: &[usize],
    spec: &MaskSpec,
    rng: &mut Rng,
    grads: &mut ModelParams,
    weight: f64,
) -> Result<SslLoss> {
    if targets.len() != frames.rows() {
        return Err(crate::error::shape_err(
            "ssl_loss",
            format!("{} targets", frames.rows()),
            format!("{}", targets.len()),
        ));
    }
    let k = params.head_ssl.output_dim();
    if let Some(&bad) = targets.iter().find(|&&c| c >= k) {
        return Err(Error::Vocab { token: bad, vocab: k });
    }
    let masked = mask_augment(frames, spec, rng);
    let n = masked.masked_frames();
    if n == 0 {
        return Ok(SslLoss { loss: 0.0, masked: 0 });
    }
    let cache = params.encode(&masked.frames)?;
    let logits = params.head_logits(&cache, Head::Ssl);
    let mut dlogits = Matrix::zeros(logits.rows(), k);
    let mut loss = 0.0;
    let inv = 1.0 / n as f64;
    for t in 0..logits.rows() {
        if !masked.time_masked[t] {
            continue;
        }
        let mut lp = logits.row(t).to_vec();
        log_softmax_in_place(&mut lp);
        loss -= lp[targets[t]];
        let row = dlogits.row_mut(t);
        for (g, l) in row.iter_mut().zip(&lp) {
            *g = weight * inv * math::exp(*l);
        }
        row[targets[t]] -= weight * inv;
    }
    params.backward(&cache, Head::Ssl, &dlogits, grads, false);
    Ok(SslLoss { loss: loss * inv, masked: n })
}

/// [`ssl_loss_accumulate`] with freshly allocated gradients.
pub fn ssl_loss(
    params: &ModelParams,
    frames: &Matrix,
    targets: &[usize],
    spec: &MaskSpec,
    rng: &mut Rng,
) -> Result<(SslLoss, ModelParams)> {
    let mut grads = params.zeros_like();
    let out = ssl_loss_accumulate(params, frames, targets, spec, rng, &mut grads, 1.0)?;
    Ok((out, grads))
}
