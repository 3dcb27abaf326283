//! Small dense linear-algebra helpers shared across the inference code.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Returns the symmetric part `(m + m^T) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Reconstructs a symmetric matrix with its eigenvalues floored at `floor`.
///
/// Used to keep Laplace covariances and averaged priors invertible.
pub fn eigen_floor(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let sym = symmetrize(m);
    let eig = sym.symmetric_eigen();
    let values = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| l.max(floor)),
    );
    let scaled = &eig.eigenvectors * DMatrix::from_diagonal(&values);
    symmetrize(&(scaled * eig.eigenvectors.transpose()))
}

/// Inverts a symmetric positive-definite matrix via Cholesky, retrying once
/// with a small diagonal regularization before giving up.
pub fn invert_spd(m: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    let sym = symmetrize(m);
    if let Some(chol) = sym.clone().cholesky() {
        return Ok(chol.inverse());
    }
    let n = sym.nrows();
    let regularized = sym + DMatrix::identity(n, n) * 1e-8;
    regularized
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::numeric(format!("{context}: matrix is singular")))
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrize(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &l| acc.min(l))
}

/// `log(sum(exp(xs)))` without overflow. Returns negative infinity for an
/// empty slice or when every entry is negative infinity.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}
