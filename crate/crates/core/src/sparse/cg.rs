use alloc::vec;
use alloc::vec::Vec;

use super::{dot, norm2, SparseMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    None,
    #[default]
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Target relative residual `||b - Ax|| / ||b||`.
    pub tol: f64,
    pub max_iter: usize,
    pub preconditioner: Preconditioner,
}

impl CgOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            preconditioner: Preconditioner::Jacobi,
        }
    }

    pub fn with_preconditioner(mut self, preconditioner: Preconditioner) -> Self {
        self.preconditioner = preconditioner;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// True relative residual of `x`, recomputed from `b - Ax`.
    pub residual: f64,
}

// Restart from the true residual at most this many times when the recursive
// residual has drifted below the target but the true one has not.
const MAX_RESTARTS: usize = 4;

/// Preconditioned conjugate gradients from a zero initial guess.
pub fn cg_solve(a: &SparseMatrix, b: &[f64], options: &CgOptions) -> Result<CgOutcome> {
    cg_solve_monitored(a, b, options, |_, _| {})
}

/// Like [`cg_solve`], calling `monitor(iteration, x)` after every update.
pub fn cg_solve_monitored(
    a: &SparseMatrix,
    b: &[f64],
    options: &CgOptions,
    mut monitor: impl FnMut(usize, &[f64]),
) -> Result<CgOutcome> {
    let n = a.n_rows();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    let b_norm = norm2(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            residual: 0.0,
        });
    }

    let inv_diag = match options.preconditioner {
        Preconditioner::None => None,
        Preconditioner::Jacobi => {
            let d = a.diagonal();
            if let Some(&bad) = d.iter().find(|&&v| !(v > 0.0)) {
                return Err(Error::Breakdown {
                    iteration: 0,
                    curvature: bad,
                });
            }
            Some(d.iter().map(|v| 1.0 / v).collect::<Vec<_>>())
        }
    };
    let apply_preconditioner = |r: &[f64], z: &mut [f64]| match &inv_diag {
        Some(inv) => z
            .iter_mut()
            .zip(r)
            .zip(inv)
            .for_each(|((z, r), d)| *z = r * d),
        None => z.copy_from_slice(r),
    };

    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut best = x.clone();
    let mut best_residual = 1.0;
    let mut iterations = 0;

    for _ in 0..=MAX_RESTARTS {
        apply_preconditioner(&r, &mut z);
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        while iterations < options.max_iter {
            a.spmv_into(&p, &mut ap)?;
            let curvature = dot(&p, &ap);
            if !(curvature > 0.0) {
                return Err(Error::Breakdown {
                    iteration: iterations,
                    curvature,
                });
            }
            let alpha = rz / curvature;
            x.iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
            r.iter_mut().zip(&ap).for_each(|(r, ap)| *r -= alpha * ap);
            iterations += 1;
            monitor(iterations, &x);

            let residual = norm2(&r) / b_norm;
            if residual < best_residual {
                best_residual = residual;
                best.copy_from_slice(&x);
            }
            if residual <= options.tol {
                break;
            }
            apply_preconditioner(&r, &mut z);
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
        }

        // Recompute the true residual; recursive residuals drift on
        // ill-conditioned systems.
        a.spmv_into(&x, &mut ap)?;
        r.iter_mut()
            .zip(b)
            .zip(&ap)
            .for_each(|((r, b), ax)| *r = b - ax);
        let residual = norm2(&r) / b_norm;
        if residual <= options.tol {
            return Ok(CgOutcome {
                x,
                iterations,
                residual,
            });
        }
        if iterations >= options.max_iter {
            break;
        }
    }

    a.spmv_into(&best, &mut ap)?;
    let best_true = libm::sqrt(
        b.iter()
            .zip(&ap)
            .map(|(b, ax)| (b - ax) * (b - ax))
            .sum::<f64>(),
    ) / b_norm;
    Err(Error::NotConverged {
        iterations,
        residual: best_true,
        best,
    })
}
