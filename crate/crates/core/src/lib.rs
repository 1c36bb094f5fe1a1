//! Sparse oblivious subspace embeddings.
//!
//! The crate generates OSNAP sketches (vertically stacked CountSketch blocks
//! with `s` signed nonzeros per column), evaluates the closed-form dimension
//! and sparsity prescriptions for them, and checks the resulting embeddings
//! empirically:
//!
//! - [`sketch`]: sketch distributions and reproducible generation.
//! - [`linalg`]: dense/CSR containers, sketch application, QR and a small
//!   symmetric eigensolver.
//! - [`planner`]: embedding dimension `m` and sparsity `s` from `(d, eps, delta)`.
//! - [`verify`]: extreme-singular-value trials of `Pi U` and failure statistics.
//! - [`moments`]: Monte Carlo and exact trace-moment estimators, the
//!   decoupling inequality and the `R` quantities.
//! - [`regress`]: sketch-and-solve least squares.
//! - [`bench`]: nnz-scaling timing of the sparse sketch kernel.
//!
//! Randomness is counter based: every random choice is a pure function of the
//! master seed and the index of the object it belongs to, so results do not
//! depend on the number of worker threads.
// Index loops follow the reference kernels; negated comparisons also reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod linalg;
pub mod moments;
pub mod planner;
pub mod regress;
pub mod rng;
pub mod sketch;
pub mod stats;
pub mod verify;

pub use error::{OseError, Result};
pub use linalg::{DenseMatrix, OrthonormalBasis, SparseMatrixCsr};
pub use sketch::{GaussianSketch, OsnapSketch, Sketch, SketchKind, SketchSpec};
