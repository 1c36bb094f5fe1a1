//! Wall-time scaling of the sparse sketch kernel in `nnz(A)`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{OseError, Result};
use crate::linalg::{apply_sketch_sparse, SparseMatrixCsr};
use crate::sketch::{generate_osnap, SketchSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub nnz: Vec<usize>,
    pub m: usize,
    pub d: usize,
    pub s: usize,
    /// Nonzeros per row of `A`; `n = nnz / per_row`.
    pub per_row: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            nnz: vec![1_000_000, 2_000_000, 4_000_000, 8_000_000],
            m: 2048,
            d: 16,
            s: 8,
            per_row: 4,
            repeats: 7,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub nnz: usize,
    pub n: usize,
    /// Fastest wall time of the kernel over the repeats. Interference only
    /// adds time, so the minimum is the least noisy estimate.
    pub seconds: f64,
    /// `seconds / previous row's seconds`; `None` for the first row.
    pub ratio_to_previous: Option<f64>,
}

/// Times `apply_sketch_sparse` at each size. Matrix and sketch generation are
/// excluded from the timings.
pub fn nnz_scaling(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    if config.nnz.is_empty() || config.repeats == 0 || config.per_row == 0 {
        return Err(OseError::param("benchmark needs sizes, repeats and per_row > 0"));
    }
    let mut rows: Vec<BenchRow> = Vec::with_capacity(config.nnz.len());
    for &nnz in &config.nnz {
        let n = (nnz / config.per_row).max(1);
        let a = SparseMatrixCsr::random_fixed_row_nnz(n, config.d, config.per_row, config.seed)?;
        let sketch = generate_osnap(&SketchSpec::osnap(config.m, n, config.s, config.seed)?)?;
        // Warm-up pass touches the matrix and the output once.
        std::hint::black_box(apply_sketch_sparse(&sketch, &a)?);
        let mut times = Vec::with_capacity(config.repeats);
        for _ in 0..config.repeats {
            let start = Instant::now();
            std::hint::black_box(apply_sketch_sparse(&sketch, &a)?);
            times.push(start.elapsed().as_secs_f64());
        }
        let seconds = times.iter().copied().fold(f64::INFINITY, f64::min);
        let ratio_to_previous = rows.last().map(|prev| seconds / prev.seconds);
        rows.push(BenchRow {
            nnz: a.nnz(),
            n,
            seconds,
            ratio_to_previous,
        });
    }
    Ok(rows)
}
