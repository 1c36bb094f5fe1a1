//! Matrix containers, sketch application kernels, orthonormalization and
//! spectral quantities of small matrices.

mod csr;
mod dense;
mod eigen;
mod qr;

pub use csr::SparseMatrixCsr;
pub use dense::DenseMatrix;
pub use eigen::symmetric_eigenvalues;
pub use qr::{orthonormality_error, orthonormalize, HouseholderQr, OrthonormalBasis, ORTHONORMALITY_TOL};

use crate::error::{OseError, Result};
use crate::sketch::{OsnapSketch, Sketch};

fn check_rows(sketch_n: usize, rows: usize) -> Result<()> {
    if sketch_n != rows {
        return Err(OseError::shape(format!(
            "sketch has {sketch_n} columns but the input has {rows} rows"
        )));
    }
    Ok(())
}

/// `ΠA` for a dense `A`.
///
/// For OSNAP the product is a scatter over the `n·s` nonzeros of `Π`, each
/// adding a scaled copy of row `l` of `A` into row `μ(l, γ)` of the output.
pub fn apply_sketch_dense(sketch: &Sketch, a: &DenseMatrix) -> Result<DenseMatrix> {
    match sketch {
        Sketch::Osnap(sk) => scatter_dense(sk, a, sk.scale()),
        Sketch::Gaussian(g) => {
            check_rows(g.n, a.rows())?;
            g.entries.matmul(a)
        }
    }
}

/// `SA` with the unscaled `±1` sketch `S = √s·Π`.
pub fn apply_unscaled_dense(sketch: &OsnapSketch, a: &DenseMatrix) -> Result<DenseMatrix> {
    scatter_dense(sketch, a, 1.0)
}

fn scatter_dense(sk: &OsnapSketch, a: &DenseMatrix, scale: f64) -> Result<DenseMatrix> {
    check_rows(sk.n(), a.rows())?;
    let d = a.cols();
    let mut out = DenseMatrix::zeros(sk.m(), d);
    for l in 0..sk.n() {
        let src = a.row(l);
        for (r, sign) in sk.column(l) {
            let v = sign * scale;
            for (o, &x) in out.row_mut(r).iter_mut().zip(src) {
                *o += v * x;
            }
        }
    }
    Ok(out)
}

/// `ΠA` for a CSR `A`, in `Θ(s·nnz(A))` time.
///
/// Accumulation order matches [`apply_sketch_dense`], so both paths agree
/// bit for bit on the same input.
pub fn apply_sketch_sparse(sketch: &OsnapSketch, a: &SparseMatrixCsr) -> Result<DenseMatrix> {
    check_rows(sketch.n(), a.rows())?;
    let d = a.cols();
    let s = sketch.s();
    let scale = sketch.scale();
    let mut out = DenseMatrix::zeros(sketch.m(), d);
    let positions = sketch.positions();
    let signs = sketch.signs();
    let row_ptr = a.row_ptr();
    let col_idx = a.col_idx();
    let values = a.values();
    let buf = out.as_mut_slice();
    for l in 0..a.rows() {
        let (lo, hi) = (row_ptr[l], row_ptr[l + 1]);
        if lo == hi {
            continue;
        }
        for g in l * s..(l + 1) * s {
            let v = signs[g] as f64 * scale;
            let base = positions[g] as usize * d;
            for k in lo..hi {
                buf[base + col_idx[k]] += v * values[k];
            }
        }
    }
    Ok(out)
}

/// Smallest and largest singular values of a tall `B`, from the
/// eigenvalues of the `d x d` Gram matrix `BᵀB`.
pub fn gram_extreme_singular_values(b: &DenseMatrix) -> Result<(f64, f64)> {
    if b.rows() < b.cols() {
        return Err(OseError::shape(format!(
            "expected a tall matrix, got {}x{}",
            b.rows(),
            b.cols()
        )));
    }
    if b.cols() == 0 {
        return Err(OseError::shape("matrix has no columns"));
    }
    if !b.is_finite() {
        return Err(OseError::Numeric("non-finite entry in sketched matrix".into()));
    }
    let ev = symmetric_eigenvalues(&b.gram())?;
    let lo = ev[0].max(0.0).sqrt();
    let hi = ev[ev.len() - 1].max(0.0).sqrt();
    Ok((lo, hi))
}

/// Normalized trace `(1/d)·Tr(M^{2q})` of a symmetric `M`, from its
/// eigenvalues.
pub fn normalized_trace_power(m: &DenseMatrix, q: u32) -> Result<f64> {
    if q == 0 {
        return Err(OseError::param("trace moment order q must be at least 1"));
    }
    let ev = symmetric_eigenvalues(m)?;
    Ok(power_mean(&ev, 2 * q))
}

/// Normalized trace `(1/d)·Tr(|M|^{2q})` with `|M| = √(MᵀM)`, from the
/// eigenvalues of `MᵀM` (the squared singular values).
pub fn normalized_trace_abs_power(m: &DenseMatrix, q: u32) -> Result<f64> {
    if q == 0 {
        return Err(OseError::param("trace moment order q must be at least 1"));
    }
    if !m.is_square() {
        return Err(OseError::shape(format!(
            "expected a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(OseError::Numeric("non-finite entry".into()));
    }
    let ev = symmetric_eigenvalues(&m.gram())?;
    let sq: Vec<f64> = ev.into_iter().map(|v| v.max(0.0)).collect();
    Ok(power_mean(&sq, q))
}

fn power_mean(values: &[f64], power: u32) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let terms: Vec<f64> = values.iter().map(|v| v.powi(power as i32)).collect();
    crate::stats::pairwise_sum(&terms) / values.len() as f64
}
