use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::Matrix;
use crate::error::{shape_err, Result};

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

fn from_na(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

/// Eigen-decomposition of a symmetric matrix.
///
/// Eigenvalues come back in descending order; column `k` of the returned
/// matrix is the unit eigenvector for eigenvalue `k`.
pub fn symmetric_eigen(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if m.rows() != m.cols() {
        return Err(shape_err("symmetric_eigen", "square", format!("{}x{}", m.rows(), m.cols())));
    }
    let eig = to_na(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..m.rows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = from_na(&eig.eigenvectors);
    let sorted = Matrix::from_fn(m.rows(), m.rows(), |r, c| vecs.get(r, order[c]));
    Ok((values, sorted))
}

/// Singular values of an arbitrary matrix, descending.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let mut s: Vec<f64> = to_na(m).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}
