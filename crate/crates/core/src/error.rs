use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid covariance model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("field contains a non-finite value at cell {index}")]
    NonFinite { index: usize },

    #[error("circulant embedding is not positive definite: clipped spectral mass {clipped_fraction:.3e} at torus size {torus_size}")]
    EmbeddingNotPd {
        clipped_fraction: f64,
        torus_size: usize,
    },

    #[error("exp(phi) overflows at cell {index} (phi = {phi})")]
    Overflow { index: usize, phi: f64 },

    #[error("nonpositive coefficient {value} at position {index}")]
    Domain { index: usize, value: f64 },

    #[error("grid mismatch: {left} cells per side vs {right}")]
    GridMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("malformed sparse matrix: {0}")]
    MalformedMatrix(String),

    #[error(
        "solver did not converge in {iterations} iterations (relative residual {residual:.3e})"
    )]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("conjugate gradient breakdown at iteration {iteration}: p'Ap = {curvature:e}")]
    Breakdown { iteration: usize, curvature: f64 },

    #[error("eigenvalue estimation did not converge (lambda_max {lambda_max:?}, lambda_min {lambda_min:?})")]
    SpectrumNotConverged {
        lambda_max: Option<f64>,
        lambda_min: Option<f64>,
    },

    #[error("sample {index}: no draw within contrast bounds after {attempts} rejection attempts")]
    RejectionExhausted { index: u64, attempts: u64 },

    #[error("truth field {index} has zero norm")]
    DegenerateTruth { index: usize },
}
