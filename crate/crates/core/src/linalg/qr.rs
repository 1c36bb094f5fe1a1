use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{OseError, Result};

/// Householder QR of a tall matrix, stored in packed form.
#[derive(Clone, Debug)]
pub struct HouseholderQr {
    packed: DenseMatrix,
    rdiag: Vec<f64>,
}

impl HouseholderQr {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let (m, n) = a.shape();
        if m < n {
            return Err(OseError::shape(format!("QR needs rows >= cols, got {m}x{n}")));
        }
        if !a.is_finite() {
            return Err(OseError::Numeric("non-finite entry in QR input".into()));
        }
        let mut qr = a.clone();
        let mut rdiag = vec![0.0; n];
        for k in 0..n {
            let mut nrm = 0.0f64;
            for i in k..m {
                nrm = nrm.hypot(qr[(i, k)]);
            }
            if nrm != 0.0 {
                if qr[(k, k)] < 0.0 {
                    nrm = -nrm;
                }
                for i in k..m {
                    qr[(i, k)] /= nrm;
                }
                qr[(k, k)] += 1.0;
                for j in k + 1..n {
                    let mut s = 0.0;
                    for i in k..m {
                        s += qr[(i, k)] * qr[(i, j)];
                    }
                    s = -s / qr[(k, k)];
                    for i in k..m {
                        let v = qr[(i, k)];
                        qr[(i, j)] += s * v;
                    }
                }
            }
            rdiag[k] = -nrm;
        }
        Ok(HouseholderQr { packed: qr, rdiag })
    }

    /// Diagonal of R (Householder sign convention).
    pub fn r_diagonal(&self) -> &[f64] {
        &self.rdiag
    }

    /// Numerical rank test: every |R_kk| above a relative threshold.
    pub fn is_full_rank(&self) -> bool {
        let (m, n) = self.packed.shape();
        let scale = self.rdiag.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if scale == 0.0 {
            return n == 0;
        }
        let tol = 10.0 * (m.max(n) as f64) * f64::EPSILON * scale;
        self.rdiag.iter().all(|v| v.abs() > tol)
    }

    fn apply_qt(&self, b: &mut [f64]) {
        let (m, n) = self.packed.shape();
        for k in 0..n {
            let vkk = self.packed[(k, k)];
            if vkk == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for i in k..m {
                s += self.packed[(i, k)] * b[i];
            }
            s = -s / vkk;
            for i in k..m {
                b[i] += s * self.packed[(i, k)];
            }
        }
    }

    /// Thin Q with columns signed so that R has a positive diagonal.
    pub fn thin_q(&self) -> DenseMatrix {
        let (m, n) = self.packed.shape();
        let mut q = DenseMatrix::zeros(m, n);
        for k in (0..n).rev() {
            q[(k, k)] = 1.0;
            let vkk = self.packed[(k, k)];
            for j in k..n {
                if vkk == 0.0 {
                    continue;
                }
                let mut s = 0.0;
                for i in k..m {
                    s += self.packed[(i, k)] * q[(i, j)];
                }
                s = -s / vkk;
                for i in k..m {
                    q[(i, j)] += s * self.packed[(i, k)];
                }
            }
        }
        for (k, &r) in self.rdiag.iter().enumerate() {
            if r < 0.0 {
                for i in 0..m {
                    q[(i, k)] = -q[(i, k)];
                }
            }
        }
        q
    }

    /// Least-squares solution of `min ||A x - b||`.
    pub fn solve_least_squares(&self, b: &[f64]) -> Result<Vec<f64>> {
        let (m, n) = self.packed.shape();
        if b.len() != m {
            return Err(OseError::shape(format!(
                "right-hand side of length {} for {m} rows",
                b.len()
            )));
        }
        if !self.is_full_rank() {
            return Err(OseError::Rank("least-squares matrix is rank deficient".into()));
        }
        let mut y = b.to_vec();
        self.apply_qt(&mut y);
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let mut s = y[k];
            for j in k + 1..n {
                s -= self.packed[(k, j)] * x[j];
            }
            x[k] = s / self.rdiag[k];
        }
        Ok(x)
    }
}

/// An `n x d` matrix with orthonormal columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthonormalBasis {
    u: DenseMatrix,
}

/// Tolerance on `max |UᵀU - I|` accepted at construction.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

impl OrthonormalBasis {
    /// Wraps a matrix that already has orthonormal columns.
    pub fn from_orthonormal(u: DenseMatrix) -> Result<Self> {
        if u.rows() < u.cols() {
            return Err(OseError::shape(format!(
                "orthonormal basis must be tall, got {}x{}",
                u.rows(),
                u.cols()
            )));
        }
        let err = orthonormality_error(&u);
        if !(err <= ORTHONORMALITY_TOL) {
            return Err(OseError::Numeric(format!(
                "columns are not orthonormal: max |UᵀU - I| = {err:e}"
            )));
        }
        Ok(OrthonormalBasis { u })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.u
    }

    pub fn n(&self) -> usize {
        self.u.rows()
    }

    pub fn d(&self) -> usize {
        self.u.cols()
    }

    /// Squared row norms (leverage scores).
    pub fn leverage_scores(&self) -> Vec<f64> {
        (0..self.u.rows())
            .map(|i| self.u.row(i).iter().map(|v| v * v).sum())
            .collect()
    }
}

/// `max |UᵀU - I|`.
pub fn orthonormality_error(u: &DenseMatrix) -> f64 {
    let mut g = u.gram();
    g.sub_diagonal(1.0);
    g.as_slice().iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Orthonormal basis for the range of a tall, full-column-rank matrix.
pub fn orthonormalize(a: &DenseMatrix) -> Result<OrthonormalBasis> {
    let qr = HouseholderQr::new(a)?;
    if !qr.is_full_rank() {
        return Err(OseError::Rank(format!(
            "{}x{} input does not have full column rank",
            a.rows(),
            a.cols()
        )));
    }
    OrthonormalBasis::from_orthonormal(qr.thin_q())
}
