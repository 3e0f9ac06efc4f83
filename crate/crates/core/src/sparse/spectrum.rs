//! Extreme eigenvalues of SPD matrices.
//!
//! `lambda_max` comes from Lanczos: the largest Ritz value of the Krylov
//! tridiagonal, stopped once its residual bound `beta_j |s_j|` falls below
//! `tol * theta`. A small residual only certifies *an* eigenvalue, and a start
//! vector nearly orthogonal to the top eigenvector converges to a lower one
//! first, so two independent starts are run and the larger estimate kept. `lambda_min` comes from inverse iteration, with every
//! `A^{-1}` application done by Jacobi-preconditioned CG at `tol / 10`, stopped
//! when the Rayleigh quotient changes by at most `tol` relative.
//!
//! Start vectors are drawn from fixed RNG streams so estimates are
//! reproducible.

use alloc::vec;
use alloc::vec::Vec;

use super::cg::{cg_solve, CgOptions};
use super::tridiagonal::eigen_last_components;
use super::{dot, norm2, SparseMatrix};
use crate::error::{Error, Result};
use crate::rng::{self, RngSeed, StreamPurpose};

const START_SEED: u64 = 0x006b_6170_7061;
const MAX_LANCZOS_STEPS: usize = 2000;
const MAX_INVERSE_STEPS: usize = 500;
const LANCZOS_STARTS: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEstimate {
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// `|lambda_max| / |lambda_min|`.
    pub kappa: f64,
    /// Lanczos steps plus inverse-iteration steps.
    pub iterations_used: usize,
    /// Relative residual `||A v - lambda v|| / lambda` of each estimate.
    pub residual_max: f64,
    pub residual_min: f64,
}

fn start_vector(n: usize, stream: u64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    let mut r = RngSeed::derive(START_SEED, StreamPurpose::Spectrum, stream, 0).rng();
    rng::fill_standard_normal(&mut r, &mut v);
    let norm = norm2(&v);
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Largest eigenvalue by Lanczos. Returns `(theta, residual, steps)`.
fn lanczos_max(a: &SparseMatrix, tol: f64, stream: u64) -> Result<(f64, f64, usize)> {
    let n = a.n_rows();
    let mut q = start_vector(n, stream);
    let mut q_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut beta_prev = 0.0;
    let mut theta = f64::NAN;
    let cap = n.min(MAX_LANCZOS_STEPS);

    for step in 1..=cap {
        a.spmv_into(&q, &mut w)?;
        w.iter_mut()
            .zip(&q_prev)
            .for_each(|(w, qp)| *w -= beta_prev * qp);
        let alpha = dot(&q, &w);
        w.iter_mut().zip(&q).for_each(|(w, q)| *w -= alpha * q);
        alphas.push(alpha);
        let beta = norm2(&w);

        let Some((ritz, last)) = eigen_last_components(&alphas, &betas) else {
            break;
        };
        let (top, &value) = ritz
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("at least one Ritz value");
        theta = value;
        let residual = beta * last[top].abs();
        if residual <= tol * theta.abs() || step == n {
            return Ok((theta, residual / theta.abs(), step));
        }

        betas.push(beta);
        beta_prev = beta;
        core::mem::swap(&mut q_prev, &mut q);
        q.iter_mut().zip(&w).for_each(|(q, w)| *q = w / beta);
    }
    Err(Error::SpectrumNotConverged {
        lambda_max: theta.is_finite().then_some(theta),
        lambda_min: None,
    })
}

/// Smallest eigenvalue by inverse iteration. Returns `(lambda, residual, steps)`.
fn inverse_iteration_min(a: &SparseMatrix, tol: f64, lambda_max: f64) -> Result<(f64, f64, usize)> {
    let n = a.n_rows();
    let mut x = start_vector(n, LANCZOS_STARTS);
    let mut ax = vec![0.0; n];
    let mut lambda = f64::NAN;
    let solve = CgOptions::new(tol / 10.0, 4 * n + 100);
    let partial = |lambda: f64| Error::SpectrumNotConverged {
        lambda_max: Some(lambda_max),
        lambda_min: lambda.is_finite().then_some(lambda),
    };

    for step in 1..=MAX_INVERSE_STEPS {
        let y = cg_solve(a, &x, &solve).map_err(|e| match e {
            Error::NotConverged { .. } => partial(lambda),
            other => other,
        })?;
        let norm = norm2(&y.x);
        x.iter_mut().zip(&y.x).for_each(|(x, y)| *x = y / norm);
        a.spmv_into(&x, &mut ax)?;
        let next = dot(&x, &ax);
        let converged = (next - lambda).abs() <= tol * next.abs();
        lambda = next;
        if converged {
            let residual = libm::sqrt(
                ax.iter()
                    .zip(&x)
                    .map(|(ax, x)| (ax - lambda * x) * (ax - lambda * x))
                    .sum::<f64>(),
            ) / lambda.abs();
            return Ok((lambda, residual, step));
        }
    }
    Err(partial(lambda))
}

/// Estimates `lambda_max`, `lambda_min` and `kappa` of an SPD matrix to
/// relative accuracy around `tol`.
pub fn estimate_extreme_eigenvalues(a: &SparseMatrix, tol: f64) -> Result<SpectrumEstimate> {
    if a.n_rows() == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            actual: 0,
        });
    }
    let mut lambda_max = f64::NEG_INFINITY;
    let mut residual_max = f64::NAN;
    let mut lanczos_steps = 0;
    for stream in 0..LANCZOS_STARTS {
        let (theta, residual, steps) = lanczos_max(a, tol, stream)?;
        lanczos_steps += steps;
        if theta > lambda_max {
            lambda_max = theta;
            residual_max = residual;
        }
    }
    let (lambda_min, residual_min, inverse_steps) = inverse_iteration_min(a, tol, lambda_max)?;
    Ok(SpectrumEstimate {
        lambda_max,
        lambda_min,
        kappa: lambda_max.abs() / lambda_min.abs(),
        iterations_used: lanczos_steps + inverse_steps,
        residual_max,
        residual_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_unit_condition_number() {
        let est = estimate_extreme_eigenvalues(&SparseMatrix::identity(10), 1e-6).unwrap();
        assert!((est.kappa - 1.0).abs() < 1e-9);
        assert!((est.lambda_max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_diagonal() {
        let est =
            estimate_extreme_eigenvalues(&SparseMatrix::from_diagonal(&[1.0, 10.0]), 1e-6).unwrap();
        assert!((est.lambda_max - 10.0).abs() < 1e-9);
        assert!((est.lambda_min - 1.0).abs() < 1e-6);
        assert!((est.kappa - 10.0).abs() < 1e-5);
    }

    #[test]
    fn wide_diagonal_spectrum() {
        let d: Vec<f64> = (1..=400).map(|i| i as f64 * 0.25).collect();
        let est = estimate_extreme_eigenvalues(&SparseMatrix::from_diagonal(&d), 1e-6).unwrap();
        assert!((est.lambda_max - 100.0).abs() / 100.0 < 1e-5);
        assert!((est.lambda_min - 0.25).abs() / 0.25 < 1e-5);
    }

    #[test]
    fn scale_invariance_of_kappa() {
        let d: Vec<f64> = (1..=50).map(|i| 1.0 + (i as f64).powi(2)).collect();
        let a = SparseMatrix::from_diagonal(&d);
        let k1 = estimate_extreme_eigenvalues(&a, 1e-9).unwrap().kappa;
        let k2 = estimate_extreme_eigenvalues(&a.scaled(37.5), 1e-9)
            .unwrap()
            .kappa;
        assert!((k1 - k2).abs() / k1 < 1e-6);
    }
}
