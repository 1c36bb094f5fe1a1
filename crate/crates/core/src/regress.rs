//! Sketch-and-solve least squares.
//!
//! `[A | b]` is sketched in a single application of `Π`; the reduced problem
//! `min ‖ΠAx - Πb‖` is solved by QR. When `Π` embeds the column space of
//! `[A | b]` with distortion `ε`, the solution satisfies
//! `‖Ax̂ - b‖² ≤ ((1+ε)/(1-ε))²·min ‖Ax - b‖²`.

use serde::{Deserialize, Serialize};

use crate::error::{OseError, Result};
use crate::linalg::{apply_sketch_dense, apply_sketch_sparse, DenseMatrix, HouseholderQr, SparseMatrixCsr};
use crate::sketch::{Sketch, SketchSpec};

/// Design matrix of a regression problem.
#[derive(Clone, Debug, PartialEq)]
pub enum DesignMatrix {
    Dense(DenseMatrix),
    Sparse(SparseMatrixCsr),
}

impl DesignMatrix {
    pub fn rows(&self) -> usize {
        match self {
            DesignMatrix::Dense(a) => a.rows(),
            DesignMatrix::Sparse(a) => a.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            DesignMatrix::Dense(a) => a.cols(),
            DesignMatrix::Sparse(a) => a.cols(),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            DesignMatrix::Dense(a) => a.clone(),
            DesignMatrix::Sparse(a) => a.to_dense(),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            DesignMatrix::Dense(a) => a.matvec(x),
            DesignMatrix::Sparse(a) => a.matvec(x),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionProblem {
    pub a: DesignMatrix,
    pub b: Vec<f64>,
}

impl RegressionProblem {
    pub fn new(a: DesignMatrix, b: Vec<f64>) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(OseError::shape(format!(
                "b has length {} but A has {} rows",
                b.len(),
                a.rows()
            )));
        }
        if a.rows() < a.cols() {
            return Err(OseError::shape(format!(
                "regression needs n >= d, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(OseError::Numeric("non-finite entry in b".into()));
        }
        Ok(RegressionProblem { a, b })
    }

    /// `‖Ax - b‖²`.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        let ax = self.a.matvec(x)?;
        Ok(ax.iter().zip(&self.b).map(|(p, t)| (p - t) * (p - t)).sum())
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn d(&self) -> usize {
        self.a.cols()
    }
}

/// The reduced instance `(ΠA, Πb)` together with the accuracy `ε̃` a
/// downstream solver should reach on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedProblem {
    pub a_tilde: DenseMatrix,
    pub b_tilde: Vec<f64>,
    pub eps_tilde: f64,
    pub spec: SketchSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub x_hat: Vec<f64>,
    /// `‖ΠAx̂ - Πb‖²`.
    pub sketched_objective: f64,
    /// `‖Ax̂ - b‖²`.
    pub exact_objective_at_xhat: f64,
    /// `min ‖Ax - b‖²`.
    pub exact_optimum: f64,
    /// `exact_objective_at_xhat / exact_optimum`; 1 when both vanish.
    pub ratio: f64,
    pub spec: SketchSpec,
}

/// Accuracy demanded of a downstream solver on the reduced instance.
pub fn reduced_accuracy(eps: f64) -> f64 {
    eps / 3.0
}

fn sketch_augmented(prob: &RegressionProblem, spec: &SketchSpec) -> Result<DenseMatrix> {
    spec.validate()?;
    if spec.n != prob.n() {
        return Err(OseError::shape(format!(
            "sketch has n={} columns but the problem has {} rows",
            spec.n,
            prob.n()
        )));
    }
    if spec.m < prob.d() + 1 {
        return Err(OseError::param(format!(
            "sketch dimension m={} is below d + 1 = {}",
            spec.m,
            prob.d() + 1
        )));
    }
    let sketch = Sketch::generate(spec)?;
    match (&prob.a, &sketch) {
        (DesignMatrix::Sparse(a), Sketch::Osnap(sk)) => apply_sketch_sparse(sk, &a.append_column(&prob.b)?),
        (DesignMatrix::Sparse(a), _) => apply_sketch_dense(&sketch, &a.to_dense().append_column(&prob.b)?),
        (DesignMatrix::Dense(a), _) => apply_sketch_dense(&sketch, &a.append_column(&prob.b)?),
    }
}

fn split_augmented(sketched: &DenseMatrix) -> (DenseMatrix, Vec<f64>) {
    let d = sketched.cols() - 1;
    let a = DenseMatrix::from_fn(sketched.rows(), d, |i, j| sketched[(i, j)]);
    (a, sketched.column(d))
}

/// Emits the sketched instance for an external (e.g. constrained or
/// regularized) solver.
pub fn reduce(prob: &RegressionProblem, spec: &SketchSpec, eps: f64) -> Result<ReducedProblem> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(OseError::param(format!("eps must lie in (0, 1), got {eps}")));
    }
    let (a_tilde, b_tilde) = split_augmented(&sketch_augmented(prob, spec)?);
    Ok(ReducedProblem {
        a_tilde,
        b_tilde,
        eps_tilde: reduced_accuracy(eps),
        spec: *spec,
    })
}

/// Dense QR solution of the full problem: `(x*, ‖Ax* - b‖²)`.
pub fn exact_least_squares(prob: &RegressionProblem) -> Result<(Vec<f64>, f64)> {
    let qr = HouseholderQr::new(&prob.a.to_dense())?;
    let x = qr.solve_least_squares(&prob.b)?;
    let objective = prob.objective(&x)?;
    Ok((x, objective))
}

/// Solves the sketched problem and scores the solution against the exact
/// optimum.
pub fn sketch_and_solve(prob: &RegressionProblem, spec: &SketchSpec) -> Result<RegressionResult> {
    let (a_tilde, b_tilde) = split_augmented(&sketch_augmented(prob, spec)?);
    let qr = HouseholderQr::new(&a_tilde)?;
    let x_hat = qr.solve_least_squares(&b_tilde).map_err(|e| match e {
        OseError::Rank(_) => OseError::Rank("sketched design matrix is rank deficient".into()),
        other => other,
    })?;
    let residual = a_tilde.matvec(&x_hat)?;
    let sketched_objective = residual.iter().zip(&b_tilde).map(|(p, t)| (p - t) * (p - t)).sum();
    let exact_objective_at_xhat = prob.objective(&x_hat)?;
    let (_, exact_optimum) = exact_least_squares(prob)?;
    let ratio = if exact_optimum > 0.0 {
        exact_objective_at_xhat / exact_optimum
    } else if exact_objective_at_xhat == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    Ok(RegressionResult {
        x_hat,
        sketched_objective,
        exact_objective_at_xhat,
        exact_optimum,
        ratio,
        spec: *spec,
    })
}
