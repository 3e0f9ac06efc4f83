//! Core numerics for generating high-contrast diffusion datasets.
//!
//! The crate is `no_std` (with `alloc`) and contains everything that is a pure
//! function of its inputs:
//!
//! * [`grf`]: stationary isotropic Gaussian random fields sampled by circulant
//!   embedding for the cubic, exponential and Gaussian covariance families.
//! * [`fields`]: log-normal coefficients `k = exp(phi)`, the contrast metric,
//!   contrast bounds and white-noise forcing.
//! * [`fvm`]: cell-centered finite volume assembly of `-div(k grad u) = f`
//!   with homogeneous Dirichlet boundaries, and the ground-truth solve.
//! * [`sparse`]: CSR storage, preconditioned conjugate gradients and extreme
//!   eigenvalue estimation.
//! * [`pipeline`]: per-sample rejection loop, dataset statistics and the
//!   relative L2 metric.
//!
//! IO, file formats and the command line live in the `condiff` crate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod fft;
pub mod fields;
pub mod fvm;
pub mod grf;
pub mod grid;
pub mod pipeline;
pub mod rng;
pub mod sparse;

pub use error::{Error, Result};
pub use fields::{CoefficientField, ContrastBounds, ContrastReport};
pub use fvm::Problem;
pub use grf::{CovarianceFamily, CovarianceModel, SpectralEmbedding};
pub use grid::{GridSpec, ScalarField};
pub use pipeline::{DatasetConfig, Sample, SampleGenerator};
pub use rng::RngSeed;
pub use sparse::{Preconditioner, SparseMatrix, SpectrumEstimate};
