//! Uniform cell-centered grids on the unit square and fields living on them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// An `n x n` grid of square cells covering `[0, 1]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    n: usize,
}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells per side, got {n}"
            )));
        }
        Ok(Self { n })
    }

    /// Cells per side.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of cells, `n^2`.
    #[inline]
    pub fn cells(&self) -> usize {
        self.n * self.n
    }

    /// Cell width `1 / n`.
    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Row-major flat index of the cell in column `i`, row `j`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    /// Center of the cell in column `i`, row `j`.
    #[inline]
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.h();
        ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h)
    }

    pub fn centers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.n).flat_map(move |j| (0..self.n).map(move |i| self.center(i, j)))
    }
}

/// Real values at the cell centers of a [`GridSpec`], row-major by (row, column).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    /// Wraps `values`, checking the length and that every value is finite.
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::DimensionMismatch {
                expected: grid.cells(),
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: GridSpec, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.cells()])
    }

    /// Samples `f(x, y)` at every cell center.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.centers().map(|(x, y)| f(x, y)).collect())
    }

    #[inline]
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// `(min, max)` over all cells.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }
}
