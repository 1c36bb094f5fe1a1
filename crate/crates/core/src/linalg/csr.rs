use rand::Rng;
use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{OseError, Result};
use crate::rng::column_stream;

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrixCsr {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrixCsr {
    /// Validates and wraps raw CSR arrays. Column indices within a row need
    /// not be sorted.
    pub fn new(rows: usize, cols: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if row_ptr.len() != rows + 1 || row_ptr[0] != 0 {
            return Err(OseError::shape("row_ptr must have rows + 1 entries starting at 0"));
        }
        if row_ptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(OseError::shape("row_ptr is not monotone"));
        }
        let nnz = row_ptr[rows];
        if col_idx.len() != nnz || values.len() != nnz {
            return Err(OseError::shape(format!(
                "row_ptr declares {nnz} nonzeros, got {} indices and {} values",
                col_idx.len(),
                values.len()
            )));
        }
        if let Some(&c) = col_idx.iter().find(|&&c| c >= cols) {
            return Err(OseError::shape(format!(
                "column index {c} out of range for {cols} columns"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(OseError::Numeric("non-finite value in sparse matrix".into()));
        }
        Ok(SparseMatrixCsr {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Assembles from 0-based `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted = triplets.to_vec();
        for &(i, j, _) in &sorted {
            if i >= rows || j >= cols {
                return Err(OseError::shape(format!(
                    "entry ({i}, {j}) outside a {rows}x{cols} matrix"
                )));
            }
        }
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self::new(rows, cols, row_ptr, col_idx, values)
    }

    pub fn from_dense(a: &DenseMatrix) -> Self {
        let mut row_ptr = Vec::with_capacity(a.rows() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..a.rows() {
            for (j, &v) in a.row(i).iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrixCsr {
            rows: a.rows(),
            cols: a.cols(),
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Random matrix with exactly `per_row` distinct nonzero columns in every
    /// row and standard normal values. Deterministic in `seed`.
    pub fn random_fixed_row_nnz(rows: usize, cols: usize, per_row: usize, seed: u64) -> Result<Self> {
        if per_row > cols {
            return Err(OseError::param(format!(
                "{per_row} nonzeros per row exceeds {cols} columns"
            )));
        }
        let mut col_idx = Vec::with_capacity(rows * per_row);
        let mut values = Vec::with_capacity(rows * per_row);
        let mut picked = Vec::with_capacity(per_row);
        for i in 0..rows {
            let mut rng = column_stream(seed, i as u64);
            picked.clear();
            while picked.len() < per_row {
                let j = rng.random_range(0..cols);
                if !picked.contains(&j) {
                    picked.push(j);
                }
            }
            picked.sort_unstable();
            for &j in &picked {
                col_idx.push(j);
                values.push(rng.sample::<f64, _>(rand_distr::StandardNormal));
            }
        }
        let row_ptr = (0..=rows).map(|i| i * per_row).collect();
        Self::new(rows, cols, row_ptr, col_idx, values)
    }

    /// Random matrix where each entry is nonzero independently with
    /// probability `density`.
    pub fn random_bernoulli(rows: usize, cols: usize, density: f64, seed: u64) -> Self {
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..rows {
            let mut rng = column_stream(seed, i as u64);
            for j in 0..cols {
                if rng.random::<f64>() < density {
                    col_idx.push(j);
                    values.push(rng.sample::<f64, _>(rand_distr::StandardNormal));
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrixCsr {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.row_ptr[self.rows]
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Nonzeros of row `i` as `(column, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                out[(i, j)] += v;
            }
        }
        out
    }

    /// Appends a dense column.
    pub fn append_column(&self, col: &[f64]) -> Result<SparseMatrixCsr> {
        if col.len() != self.rows {
            return Err(OseError::shape(format!(
                "column of length {} for {} rows",
                col.len(),
                self.rows
            )));
        }
        let mut row_ptr = Vec::with_capacity(self.rows + 1);
        let mut col_idx = Vec::with_capacity(self.nnz() + self.rows);
        let mut values = Vec::with_capacity(self.nnz() + self.rows);
        row_ptr.push(0);
        for (i, &b) in col.iter().enumerate() {
            for (j, v) in self.row(i) {
                col_idx.push(j);
                values.push(v);
            }
            if b != 0.0 {
                col_idx.push(self.cols);
                values.push(b);
            }
            row_ptr.push(col_idx.len());
        }
        Self::new(self.rows, self.cols + 1, row_ptr, col_idx, values)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(OseError::shape(format!(
                "vector of length {} for a {}x{} matrix",
                x.len(),
                self.rows,
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect())
    }
}
