use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Square matrix in compressed sparse row form. Column indices are strictly
/// increasing within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    row_offsets: Vec<usize>,
    column_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(
        n_rows: usize,
        row_offsets: Vec<usize>,
        column_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::MalformedMatrix(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if row_offsets[0] != 0 || row_offsets[n_rows] != column_indices.len() {
            return Err(Error::MalformedMatrix(
                "row_offsets must span the column array".into(),
            ));
        }
        if column_indices.len() != values.len() {
            return Err(Error::MalformedMatrix(
                "column and value arrays differ in length".into(),
            ));
        }
        for (row, w) in row_offsets.windows(2).enumerate() {
            if w[0] > w[1] {
                return Err(Error::MalformedMatrix(format!(
                    "row_offsets decrease at row {row}"
                )));
            }
            let cols = &column_indices[w[0]..w[1]];
            if cols.iter().any(|&c| c >= n_rows) {
                return Err(Error::MalformedMatrix(format!(
                    "column index out of range in row {row}"
                )));
            }
            if cols.windows(2).any(|p| p[0] >= p[1]) {
                return Err(Error::MalformedMatrix(format!(
                    "columns not strictly increasing in row {row}"
                )));
            }
        }
        Ok(Self {
            n_rows,
            row_offsets,
            column_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diagonal: &[f64]) -> Self {
        let n = diagonal.len();
        Self {
            n_rows: n,
            row_offsets: (0..=n).collect(),
            column_indices: (0..n).collect(),
            values: diagonal.to_vec(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn column_indices(&self) -> &[usize] {
        &self.column_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(column, value)` pairs of one row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.column_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Stored entry at `(i, j)`, if any.
    pub fn find(&self, i: usize, j: usize) -> Option<f64> {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.column_indices[range.clone()]
            .binary_search(&j)
            .ok()
            .map(|pos| self.values[range.start + pos])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.find(i, j).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, i)).collect()
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n_rows).all(|i| self.row(i).all(|(j, v)| self.find(j, i) == Some(v)))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                actual: x.len(),
            });
        }
        if y.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                actual: y.len(),
            });
        }
        for (i, out) in y.iter_mut().enumerate() {
            let (start, end) = (self.row_offsets[i], self.row_offsets[i + 1]);
            *out = self.column_indices[start..end]
                .iter()
                .zip(&self.values[start..end])
                .map(|(&j, &a)| a * x[j])
                .sum();
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n_rows]; self.n_rows];
        for (i, row) in dense.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        dense
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiagonal(n: usize) -> SparseMatrix {
        let mut offsets = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            if i > 0 {
                cols.push(i - 1);
                vals.push(-1.0);
            }
            cols.push(i);
            vals.push(2.0);
            if i + 1 < n {
                cols.push(i + 1);
                vals.push(-1.0);
            }
            offsets.push(cols.len());
        }
        SparseMatrix::new(n, offsets, cols, vals).unwrap()
    }

    #[test]
    fn identity_and_zero_products() {
        let x = [1.0, -2.0, 3.5];
        assert_eq!(SparseMatrix::identity(3).spmv(&x).unwrap(), x.to_vec());
        assert_eq!(tridiagonal(3).spmv(&[0.0; 3]).unwrap(), vec![0.0; 3]);
        assert_eq!(
            tridiagonal(4).spmv(&[1.0; 4]).unwrap(),
            vec![1.0, 0.0, 0.0, 1.0]
        );
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            SparseMatrix::identity(3).spmv(&[1.0; 2]),
            Err(Error::DimensionMismatch {
                expected: 3,
                actual: 2
            })
        ));
    }

    #[test]
    fn validates_structure() {
        assert!(SparseMatrix::new(2, vec![0, 1], vec![0], vec![1.0]).is_err());
        assert!(SparseMatrix::new(2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::new(2, vec![0, 1, 2], vec![0, 2], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::new(2, vec![0, 2, 1], vec![0, 1], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn symmetry_detection() {
        assert!(tridiagonal(5).is_symmetric());
        let lower =
            SparseMatrix::new(2, vec![0, 1, 3], vec![0, 0, 1], vec![1.0, -1.0, 1.0]).unwrap();
        assert!(!lower.is_symmetric());
        assert_eq!(lower.get(1, 0), -1.0);
        assert_eq!(lower.get(0, 1), 0.0);
    }
}
