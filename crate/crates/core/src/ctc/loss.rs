use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::BLANK;
use crate::error::{shape_err, Error, Result};
use crate::math;
use crate::numerics::{log_add, log_softmax_rows, Matrix};

/// Loss and its gradient with respect to the unnormalized logits.
#[derive(Debug, Clone, PartialEq)]
pub struct CtcOutput {
    pub loss: f64,
    pub grad: Matrix,
}

/// Fewest frames that can emit `target`: one per token plus a blank between
/// each adjacent equal pair.
pub fn required_frames(target: &[usize]) -> usize {
    target.len() + target.windows(2).filter(|w| w[0] == w[1]).count()
}

fn check_inputs(logits: &Matrix, target: &[usize]) -> Result<()> {
    let v = logits.cols();
    if v < 2 {
        return Err(shape_err("ctc", "vocabulary of at least 2", format!("{v}")));
    }
    if let Some(&bad) = target.iter().find(|&&t| t == BLANK || t >= v) {
        return Err(Error::Vocab { token: bad, vocab: v });
    }
    let required = required_frames(target);
    if logits.rows() < required {
        return Err(Error::Infeasible {
            frames: logits.rows(),
            required,
        });
    }
    Ok(())
}

/// `−log P(target | logits)` by the log-space forward–backward recursions,
/// with `∂loss/∂logits`.
///
/// `logits` is `T×V` and is normalized per frame internally.
pub fn ctc_loss(logits: &Matrix, target: &[usize]) -> Result<CtcOutput> {
    check_inputs(logits, target)?;
    let (t_len, v) = logits.shape();
    if t_len == 0 {
        return Ok(CtcOutput {
            loss: 0.0,
            grad: Matrix::zeros(0, v),
        });
    }
    let lp = log_softmax_rows(logits);
    // blank-interleaved label: −, y1, −, y2, …, −
    let ext: Vec<usize> = (0..2 * target.len() + 1)
        .map(|s| if s % 2 == 0 { BLANK } else { target[s / 2] })
        .collect();
    let s_len = ext.len();
    let ninf = f64::NEG_INFINITY;
    let can_skip = |s: usize| s >= 2 && ext[s] != BLANK && ext[s] != ext[s - 2];

    // alpha[t][s]: log prob of prefixes ending at s after emitting frame t
    let mut alpha = vec![ninf; t_len * s_len];
    alpha[0] = lp.get(0, ext[0]);
    if s_len > 1 {
        alpha[1] = lp.get(0, ext[1]);
    }
    for t in 1..t_len {
        let (prev, cur) = alpha.split_at_mut(t * s_len);
        let prev = &prev[(t - 1) * s_len..];
        for s in 0..s_len {
            let mut acc = prev[s];
            if s >= 1 {
                acc = log_add(acc, prev[s - 1]);
            }
            if can_skip(s) {
                acc = log_add(acc, prev[s - 2]);
            }
            cur[s] = if acc == ninf { ninf } else { acc + lp.get(t, ext[s]) };
        }
    }

    // beta[t][s]: log prob of emitting frames t+1.. given state s at frame t
    let mut beta = vec![ninf; t_len * s_len];
    let last = (t_len - 1) * s_len;
    beta[last + s_len - 1] = 0.0;
    if s_len > 1 {
        beta[last + s_len - 2] = 0.0;
    }
    for t in (0..t_len - 1).rev() {
        let (cur, next) = beta.split_at_mut((t + 1) * s_len);
        let cur = &mut cur[t * s_len..];
        let next = &next[..s_len];
        for s in 0..s_len {
            let mut acc = next[s] + lp.get(t + 1, ext[s]);
            if s + 1 < s_len {
                acc = log_add(acc, next[s + 1] + lp.get(t + 1, ext[s + 1]));
            }
            if s + 2 < s_len && can_skip(s + 2) {
                acc = log_add(acc, next[s + 2] + lp.get(t + 1, ext[s + 2]));
            }
            cur[s] = acc;
        }
    }

    let end = &alpha[last..];
    let log_p = if s_len > 1 {
        log_add(end[s_len - 1], end[s_len - 2])
    } else {
        end[0]
    };
    if log_p == ninf {
        return Err(Error::Infeasible {
            frames: t_len,
            required: required_frames(target),
        });
    }

    // ∂loss/∂u[t,k] = softmax(u_t)[k] − Σ_{s: ext[s]=k} exp(α+β − log P)
    let mut grad = Matrix::zeros(t_len, v);
    for t in 0..t_len {
        let row = grad.row_mut(t);
        for (k, g) in row.iter_mut().enumerate() {
            *g = math::exp(lp.get(t, k));
        }
        for s in 0..s_len {
            let occ = alpha[t * s_len + s] + beta[t * s_len + s];
            if occ != ninf {
                row[ext[s]] -= math::exp(occ - log_p);
            }
        }
    }
    Ok(CtcOutput { loss: -log_p, grad })
}

/// Reference loss by enumerating all `Vᵀ` frame paths and collapsing each one.
///
/// Only for small instances (`Vᵀ ≤ 10⁷`); used to test [`ctc_loss`].
pub fn brute_force_ctc(logits: &Matrix, target: &[usize]) -> Result<f64> {
    let (t_len, v) = logits.shape();
    let paths = (0..t_len).try_fold(1u64, |acc, _| acc.checked_mul(v as u64));
    match paths {
        Some(n) if n <= 10_000_000 => {}
        _ => return Err(Error::TooLarge(format!("{v}^{t_len} paths"))),
    }
    if v < 2 {
        return Err(shape_err("brute_force_ctc", "vocabulary of at least 2", format!("{v}")));
    }
    let lp = log_softmax_rows(logits);
    let mut path = vec![0usize; t_len];
    let mut total = f64::NEG_INFINITY;
    let mut collapsed = Vec::with_capacity(t_len);
    loop {
        collapsed.clear();
        let mut prev = None;
        for &k in &path {
            if Some(k) != prev && k != BLANK {
                collapsed.push(k);
            }
            prev = Some(k);
        }
        if collapsed == target {
            let score: f64 = path.iter().enumerate().map(|(t, &k)| lp.get(t, k)).sum();
            total = log_add(total, score);
        }
        // odometer increment over the path
        let mut i = 0;
        loop {
            if i == t_len {
                return if total == f64::NEG_INFINITY {
                    Err(Error::Infeasible {
                        frames: t_len,
                        required: required_frames(target),
                    })
                } else {
                    Ok(-total)
                };
            }
            path[i] += 1;
            if path[i] < v {
                break;
            }
            path[i] = 0;
            i += 1;
        }
    }
}
