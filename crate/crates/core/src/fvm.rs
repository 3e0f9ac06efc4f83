//! Cell-centered finite volumes for `-div(k grad u) = f` on the unit square
//! with `u = 0` on the boundary.
//!
//! Unknowns, coefficients and forcing all live at cell centers. Interior
//! faces carry the harmonic-mean transmissibility of the two adjacent cells;
//! boundary faces see a zero ghost value half a cell away, which contributes
//! `2 k` to the diagonal. Rows are kept in transmissibility form, so the
//! right-hand side is `f h^2`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fields::CoefficientField;
use crate::grid::{GridSpec, ScalarField};
use crate::sparse::{cg_solve, CgOptions, SparseMatrix};

/// Default relative residual for ground-truth solves.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-8;

/// Iteration cap per cell-per-side.
pub const MAX_ITER_PER_CELL: usize = 50;

/// Harmonic-mean transmissibility `2 k_l k_r / (k_l + k_r)` of an interior face.
pub fn face_transmissibility(k_left: f64, k_right: f64) -> Result<f64> {
    if !(k_left > 0.0) {
        return Err(Error::Domain {
            index: 0,
            value: k_left,
        });
    }
    if !(k_right > 0.0) {
        return Err(Error::Domain {
            index: 1,
            value: k_right,
        });
    }
    Ok(harmonic(k_left, k_right))
}

// Commutative in IEEE arithmetic, so both off-diagonals get identical bits.
#[inline]
fn harmonic(a: f64, b: f64) -> f64 {
    if a.is_infinite() || b.is_infinite() {
        return 2.0 * a.min(b);
    }
    2.0 * a * b / (a + b)
}

/// Transmissibility of a Dirichlet boundary face of a cell with coefficient `k`.
#[inline]
pub fn boundary_transmissibility(k: f64) -> f64 {
    2.0 * k
}

/// An assembled linear system `A u = b`.
#[derive(Debug, Clone)]
pub struct Problem {
    grid: GridSpec,
    matrix: SparseMatrix,
    rhs: Vec<f64>,
}

impl Problem {
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// `||A u - b|| / ||b||` (or `||A u||` when `b = 0`).
    pub fn relative_residual(&self, u: &ScalarField) -> Result<f64> {
        if u.grid() != self.grid {
            return Err(Error::GridMismatch {
                left: self.grid.n(),
                right: u.grid().n(),
            });
        }
        let au = self.matrix.spmv(u.values())?;
        let r: f64 = au
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let b: f64 = self.rhs.iter().map(|b| b * b).sum();
        Ok(if b > 0.0 {
            libm::sqrt(r / b)
        } else {
            libm::sqrt(r)
        })
    }
}

pub fn assemble(k: &CoefficientField, f: &ScalarField) -> Result<Problem> {
    assemble_with_values(k.as_field(), f)
}

/// Assembly from raw coefficient values, e.g. read back from disk.
pub fn assemble_with_values(k: &ScalarField, f: &ScalarField) -> Result<Problem> {
    let grid = k.grid();
    if f.grid() != grid {
        return Err(Error::GridMismatch {
            left: grid.n(),
            right: f.grid().n(),
        });
    }
    let kv = k.values();
    if let Some(index) = kv.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Domain {
            index,
            value: kv[index],
        });
    }

    let n = grid.n();
    let cells = grid.cells();
    let mut row_offsets = Vec::with_capacity(cells + 1);
    let mut columns = Vec::with_capacity(5 * cells);
    let mut values = Vec::with_capacity(5 * cells);
    row_offsets.push(0);

    let t = |p: usize, q: usize| harmonic(kv[p], kv[q]);
    for j in 0..n {
        for i in 0..n {
            let p = grid.index(i, j);
            let south = (j > 0).then(|| p - n);
            let west = (i > 0).then(|| p - 1);
            let east = (i + 1 < n).then(|| p + 1);
            let north = (j + 1 < n).then(|| p + n);

            let mut diagonal = 0.0;
            for neighbour in [south, west, east, north] {
                diagonal += match neighbour {
                    Some(q) => t(p, q),
                    None => boundary_transmissibility(kv[p]),
                };
            }
            // Column order: south < west < self < east < north.
            for q in [south, west].into_iter().flatten() {
                columns.push(q);
                values.push(-t(p, q));
            }
            columns.push(p);
            values.push(diagonal);
            for q in [east, north].into_iter().flatten() {
                columns.push(q);
                values.push(-t(p, q));
            }
            row_offsets.push(columns.len());
        }
    }

    let h2 = grid.h() * grid.h();
    let rhs = f.values().iter().map(|v| v * h2).collect();
    let matrix = SparseMatrix::new(cells, row_offsets, columns, values)?;
    Ok(Problem { grid, matrix, rhs })
}

/// Result of a ground-truth solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub u: ScalarField,
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned CG to relative residual `tol`, capped at `50 n`
/// iterations.
pub fn solve(problem: &Problem, tol: f64) -> Result<Solution> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "solver tolerance must lie in (0, 1), got {tol}"
        )));
    }
    let options = CgOptions::new(tol, MAX_ITER_PER_CELL * problem.grid.n());
    let out = cg_solve(&problem.matrix, &problem.rhs, &options)?;
    Ok(Solution {
        u: ScalarField::new(problem.grid, out.x)?,
        iterations: out.iterations,
        residual: out.residual,
    })
}
