use alloc::format;
use alloc::vec::Vec;

use super::Matrix;
use crate::error::{shape_err, Result};
use crate::math;

/// `log Σ exp(xᵢ)` with max subtraction; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + math::ln(xs.iter().map(|x| math::exp(x - max)).sum::<f64>())
}

/// Two-argument log-add, the inner step of the CTC recursions.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + math::ln(1.0 + math::exp(lo - hi))
}

pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let mut out = xs.to_vec();
    softmax_in_place(&mut out);
    out
}

pub fn softmax_in_place(xs: &mut [f64]) {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in xs.iter_mut() {
        *x = math::exp(*x - max);
        total += *x;
    }
    for x in xs.iter_mut() {
        *x /= total;
    }
}

pub fn log_softmax_in_place(xs: &mut [f64]) {
    let lse = log_sum_exp(xs);
    xs.iter_mut().for_each(|x| *x -= lse);
}

/// Row-wise log-softmax of a `T×V` matrix.
pub fn log_softmax_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for r in 0..out.rows() {
        log_softmax_in_place(out.row_mut(r));
    }
    out
}

fn check_column(op: &'static str, m: &Matrix, len: usize) -> Result<()> {
    if m.cols() != 1 || m.rows() != len {
        return Err(shape_err(op, format!("{len}x1"), format!("{}x{}", m.rows(), m.cols())));
    }
    Ok(())
}

/// Gradient of `−y·log softmax(v)` with respect to the logits `v`: `softmax(v) − y`.
///
/// `y` is normally one-hot but any target distribution is accepted.
pub fn softmax_ce_grad(v: &Matrix, y: &Matrix) -> Result<Matrix> {
    check_column("softmax_ce_grad", v, v.rows())?;
    check_column("softmax_ce_grad", y, v.rows())?;
    let p = softmax(v.data());
    let g = p.iter().zip(y.data()).map(|(p, y)| p - y).collect();
    Matrix::from_vec(v.rows(), 1, g)
}

/// Cross-entropy loss of the bias-free two-layer classifier `softmax(W_c W_e o)`.
pub fn ce_layer_loss(o: &Matrix, y: &Matrix, w_e: &Matrix, w_c: &Matrix) -> Result<f64> {
    check_ce_shapes(o, y, w_e, w_c)?;
    let mut v = w_c.matmul(&w_e.matmul(o)?)?.into_vec();
    log_softmax_in_place(&mut v);
    Ok(-v.iter().zip(y.data()).map(|(l, y)| l * y).sum::<f64>())
}

/// Analytic gradients `(∂L/∂W_c, ∂L/∂W_e)` of [`ce_layer_loss`]:
/// `∂L/∂W_c = (softmax(W_c z) − y) zᵀ` with `z = W_e o`, and
/// `∂L/∂W_e = W_cᵀ (softmax(W_c W_e o) − y) oᵀ`.
pub fn ce_layer_grads(o: &Matrix, y: &Matrix, w_e: &Matrix, w_c: &Matrix) -> Result<(Matrix, Matrix)> {
    check_ce_shapes(o, y, w_e, w_c)?;
    let z = w_e.matmul(o)?;
    let v = w_c.matmul(&z)?;
    let g = softmax_ce_grad(&v, y)?;
    let d_wc = g.matmul_t(&z)?;
    let d_we = w_c.t_matmul(&g)?.matmul_t(o)?;
    Ok((d_wc, d_we))
}

fn check_ce_shapes(o: &Matrix, y: &Matrix, w_e: &Matrix, w_c: &Matrix) -> Result<()> {
    let (e, n) = w_e.shape();
    let (c, e2) = w_c.shape();
    if e2 != e {
        return Err(shape_err("ce_layer", format!("W_c with {e} cols"), format!("{e2}")));
    }
    check_column("ce_layer(o)", o, n)?;
    check_column("ce_layer(y)", y, c)
}
