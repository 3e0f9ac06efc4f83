//! Sparse symmetric linear algebra: CSR storage, preconditioned conjugate
//! gradients and extreme eigenvalue estimation.

mod cg;
mod csr;
mod spectrum;
mod tridiagonal;

pub use cg::{cg_solve, cg_solve_monitored, CgOptions, CgOutcome, Preconditioner};
pub use csr::SparseMatrix;
pub use spectrum::{estimate_extreme_eigenvalues, SpectrumEstimate};

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}
