//! Trace-moment estimators for OSNAP embeddings.
//!
//! Moments are taken in the unscaled normalization `S = √s·Π` (entries in
//! `{0, ±1}`) unless a [`Normalization::Scaled`] estimate is requested. Every
//! estimator comes in a Monte Carlo form and, for tiny instances, an exact
//! form that enumerates all `(2m/s)^{ns}` equally likely sketches.
//!
//! Per-sample values are collected in sample order and reduced by pairwise
//! summation, so estimates do not depend on the number of threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OseError, Result};
use crate::linalg::{
    apply_sketch_dense, apply_unscaled_dense, normalized_trace_abs_power, normalized_trace_power, DenseMatrix,
    OrthonormalBasis,
};
use crate::rng::mix_seed;
use crate::sketch::{generate_osnap, OsnapSketch, Sketch, SketchSpec};
use crate::stats::{mean_and_stderr, pairwise_sum};

/// Largest outcome space the exact estimators will enumerate.
pub const ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `S` with `±1` entries; targets `pm·ε`.
    #[default]
    Unscaled,
    /// `Π = S/√s`; targets `ε`.
    Scaled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum EstimatorMode {
    Exact,
    MonteCarlo { trials: usize },
}

/// Estimate of a normalized trace moment `E[tr |M|^{2q}]` and its
/// `2q`-th root.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub q: u32,
    pub raw_mean: f64,
    pub root: f64,
    /// Standard error of `raw_mean`; zero for exact estimates.
    pub stderr: f64,
    /// Delta-method standard error of `root`; approximate.
    pub root_stderr: f64,
    /// Samples drawn, or outcomes enumerated.
    pub trials: u64,
    pub exact: bool,
}

impl MomentEstimate {
    fn from_samples(q: u32, values: &[f64], exact: bool) -> Self {
        let (raw_mean, stderr) = if exact {
            (pairwise_sum(values) / values.len() as f64, 0.0)
        } else {
            mean_and_stderr(values)
        };
        Self::from_raw(q, raw_mean, stderr, values.len() as u64, exact)
    }

    fn from_raw(q: u32, raw_mean: f64, stderr: f64, trials: u64, exact: bool) -> Self {
        let order = 2.0 * q as f64;
        let raw_mean = raw_mean.max(0.0);
        let root = raw_mean.powf(1.0 / order);
        let root_stderr = if stderr == 0.0 {
            0.0
        } else {
            stderr / (order * raw_mean.powf((order - 1.0) / order))
        };
        MomentEstimate {
            q,
            raw_mean,
            root,
            stderr,
            root_stderr,
            trials,
            exact,
        }
    }
}

fn check_instance(u: &OrthonormalBasis, spec: &SketchSpec, q: u32) -> Result<()> {
    spec.validate()?;
    if !spec.is_sparse() {
        return Err(OseError::param("moment estimators need an osnap or countsketch spec"));
    }
    if spec.n != u.n() {
        return Err(OseError::shape(format!(
            "sketch has n={} columns but U has {} rows",
            spec.n,
            u.n()
        )));
    }
    if q == 0 {
        return Err(OseError::param("moment order q must be at least 1"));
    }
    Ok(())
}

/// Number of equally likely sketches for `copies` independent draws.
pub fn outcome_space(spec: &SketchSpec, copies: u32) -> f64 {
    let per_entry = 2.0 * spec.block_size() as f64;
    per_entry.powf((spec.n * spec.s) as f64 * copies as f64)
}

fn enumerable(spec: &SketchSpec, copies: u32) -> Result<u64> {
    let outcomes = outcome_space(spec, copies);
    if outcomes > ENUMERATION_CAP as f64 {
        return Err(OseError::SpaceTooLarge {
            outcomes,
            cap: ENUMERATION_CAP,
        });
    }
    Ok(outcomes.round() as u64)
}

/// Decodes outcome `index` into `copies` sketches. Each `(l, γ)` entry is a
/// digit in base `2·(m/s)`: the low bit is the sign, the rest the offset in
/// its block.
fn decode_outcome(spec: &SketchSpec, index: u64, copies: usize) -> Vec<OsnapSketch> {
    let b = spec.block_size() as u64;
    let base = 2 * b;
    let entries = spec.n * spec.s;
    let mut rest = index;
    (0..copies)
        .map(|_| {
            let mut positions = Vec::with_capacity(entries);
            let mut signs = Vec::with_capacity(entries);
            for e in 0..entries {
                let digit = rest % base;
                rest /= base;
                let gamma = (e % spec.s) as u64;
                positions.push((gamma * b + digit / 2) as u32);
                signs.push(if digit.is_multiple_of(2) { 1 } else { -1 });
            }
            OsnapSketch::from_parts(*spec, positions, signs).expect("decoded outcome respects the block structure")
        })
        .collect()
}

fn draw(spec: &SketchSpec, trial: u64, copies: usize) -> Result<Vec<OsnapSketch>> {
    let base = mix_seed(spec.seed, trial);
    (0..copies)
        .map(|c| generate_osnap(&spec.with_seed(mix_seed(base, c as u64))))
        .collect()
}

/// Evaluates `sample` on every outcome (exact) or on `trials` random draws.
fn run<F>(spec: &SketchSpec, copies: usize, mode: EstimatorMode, sample: F) -> Result<(Vec<f64>, bool)>
where
    F: Fn(&[OsnapSketch]) -> Result<f64> + Sync,
{
    match mode {
        EstimatorMode::Exact => {
            let outcomes = enumerable(spec, copies as u32)?;
            let values = (0..outcomes)
                .into_par_iter()
                .map(|i| sample(&decode_outcome(spec, i, copies)))
                .collect::<Result<Vec<f64>>>()?;
            Ok((values, true))
        }
        EstimatorMode::MonteCarlo { trials } => {
            if trials < 2 {
                return Err(OseError::param("Monte Carlo estimates need at least 2 trials"));
            }
            let values = (0..trials as u64)
                .into_par_iter()
                .map(|t| sample(&draw(spec, t, copies)?))
                .collect::<Result<Vec<f64>>>()?;
            Ok((values, false))
        }
    }
}

fn embedding_error(sk: &OsnapSketch, u: &DenseMatrix, norm: Normalization) -> Result<DenseMatrix> {
    let (x, shift) = match norm {
        Normalization::Unscaled => (apply_unscaled_dense(sk, u)?, sk.s() as f64),
        Normalization::Scaled => (apply_sketch_dense(&Sketch::Osnap(sk.clone()), u)?, 1.0),
    };
    let mut y = x.gram();
    y.sub_diagonal(shift);
    Ok(y)
}

/// `E[tr(XᵀX - pm·I)^{2q}]` with `X = SU` (or `E[tr((ΠU)ᵀ(ΠU) - I)^{2q}]`
/// when scaled).
pub fn embedding_moment(
    u: &OrthonormalBasis,
    spec: &SketchSpec,
    q: u32,
    mode: EstimatorMode,
    norm: Normalization,
) -> Result<MomentEstimate> {
    check_instance(u, spec, q)?;
    let um = u.matrix();
    let (values, exact) = run(spec, 1, mode, |sk| {
        normalized_trace_power(&embedding_error(&sk[0], um, norm)?, q)
    })?;
    Ok(MomentEstimate::from_samples(q, &values, exact))
}

/// Monte Carlo [`embedding_moment`].
pub fn mc_embedding_moment(
    u: &OrthonormalBasis,
    spec: &SketchSpec,
    q: u32,
    trials: usize,
    norm: Normalization,
) -> Result<MomentEstimate> {
    embedding_moment(u, spec, q, EstimatorMode::MonteCarlo { trials }, norm)
}

/// Exact [`embedding_moment`] by enumeration, unscaled.
pub fn exact_embedding_moment(u: &OrthonormalBasis, spec: &SketchSpec, q: u32) -> Result<MomentEstimate> {
    embedding_moment(u, spec, q, EstimatorMode::Exact, Normalization::Unscaled)
}

/// `E[tr |(S₁U)ᵀ(S₂U)|^{2q}]` for independent unscaled copies `S₁, S₂`.
pub fn decoupled_moment(
    u: &OrthonormalBasis,
    spec: &SketchSpec,
    q: u32,
    mode: EstimatorMode,
) -> Result<MomentEstimate> {
    check_instance(u, spec, q)?;
    let um = u.matrix();
    let (values, exact) = run(spec, 2, mode, |sk| {
        let x1 = apply_unscaled_dense(&sk[0], um)?;
        let x2 = apply_unscaled_dense(&sk[1], um)?;
        normalized_trace_abs_power(&x1.t_matmul(&x2)?, q)
    })?;
    Ok(MomentEstimate::from_samples(q, &values, exact))
}

/// Monte Carlo [`decoupled_moment`].
pub fn mc_decoupled_moment(u: &OrthonormalBasis, spec: &SketchSpec, q: u32, trials: usize) -> Result<MomentEstimate> {
    decoupled_moment(u, spec, q, EstimatorMode::MonteCarlo { trials })
}

/// Both sides of the decoupling inequality
/// `E[tr(UᵀSᵀSU - pm·I)^{2q}] ≤ E[tr(2((S′U)ᵀSU + (SU)ᵀS′U))^{2q}]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecouplingCheck {
    pub q: u32,
    pub lhs: MomentEstimate,
    pub rhs: MomentEstimate,
    pub lhs_root: f64,
    pub rhs_root: f64,
    /// `lhs_root / rhs_root`; at most 1 when the inequality holds.
    pub ratio: f64,
    /// Delta-method standard error of `ratio`; zero in exact mode.
    pub ratio_stderr: f64,
}

/// Evaluates both sides of the decoupling inequality. In Monte Carlo mode the
/// two sides use independent draws.
pub fn decoupling_inequality_check(
    u: &OrthonormalBasis,
    spec: &SketchSpec,
    q: u32,
    mode: EstimatorMode,
) -> Result<DecouplingCheck> {
    check_instance(u, spec, q)?;
    if mode == EstimatorMode::Exact {
        // Fail before enumerating the left side if the right side is too big.
        enumerable(spec, 2)?;
    }
    let um = u.matrix();
    let lhs = embedding_moment(u, spec, q, mode, Normalization::Unscaled)?;
    let rhs_spec = spec.with_seed(mix_seed(spec.seed, 0x5EC0_4D5E));
    let (values, exact) = run(&rhs_spec, 2, mode, |sk| {
        let x = apply_unscaled_dense(&sk[0], um)?;
        let x_prime = apply_unscaled_dense(&sk[1], um)?;
        let cross = x_prime.t_matmul(&x)?;
        let mut sym = DenseMatrix::from_fn(cross.rows(), cross.cols(), |i, j| 2.0 * (cross[(i, j)] + cross[(j, i)]));
        // Exact symmetry for the eigensolver.
        for i in 0..sym.rows() {
            for j in 0..i {
                sym[(i, j)] = sym[(j, i)];
            }
        }
        normalized_trace_power(&sym, q)
    })?;
    let rhs = MomentEstimate::from_samples(q, &values, exact);
    let ratio = lhs.root / rhs.root;
    let ratio_stderr = if lhs.exact {
        0.0
    } else {
        let rel = |e: &MomentEstimate| if e.root > 0.0 { e.root_stderr / e.root } else { 0.0 };
        ratio * (rel(&lhs).powi(2) + rel(&rhs).powi(2)).sqrt()
    };
    Ok(DecouplingCheck {
        q,
        lhs,
        rhs,
        lhs_root: lhs.root,
        rhs_root: rhs.root,
        ratio,
        ratio_stderr,
    })
}

/// The `R₁`, `R₂` quantities at `V = I` and their closed-form bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RQuantities {
    pub r: u32,
    /// `√(pd + 2r)·(Σ_{(l,γ)} (1/d)‖u_l‖^{2r})^{1/(2r)}`, exact.
    pub r2: f64,
    /// `R₁^{2r}` in `raw_mean`, `R₁` in `root`.
    pub r1: MomentEstimate,
    /// `(pm)^{1/(2r)}·c·√(pd + 2r)` with the supplied constants.
    pub bound_r1: f64,
    pub bound_r2: f64,
}

/// Computes `R₂` exactly and estimates
/// `R₁^{2r} = Σ_{(l,γ)} (1/d)·E‖UᵀS₁ᵀe_μ‖^{2r}·‖u_l‖^{2r}`, where `μ` is
/// uniform on block `γ`. Summing over `γ` turns the block averages into
/// `s` times the average over all `m` rows, which is what each sample
/// computes.
pub fn r_quantities(
    u: &OrthonormalBasis,
    spec: &SketchSpec,
    r: u32,
    mode: EstimatorMode,
    c_r1: f64,
    c_r2: f64,
) -> Result<RQuantities> {
    check_instance(u, spec, r)?;
    let (s, d, p) = (spec.s as f64, u.d() as f64, spec.p());
    let order = 2 * r as i32;
    let leverage_power: Vec<f64> = u.leverage_scores().iter().map(|l| l.sqrt().powi(order)).collect();
    let leverage_sum = pairwise_sum(&leverage_power);
    let width = (p * d + 2.0 * r as f64).sqrt();
    let r2 = width * (s * leverage_sum / d).powf(1.0 / order as f64);

    let um = u.matrix();
    let weight = s * leverage_sum / d;
    let (values, exact) = run(spec, 1, mode, |sk| {
        let x = apply_unscaled_dense(&sk[0], um)?;
        let rows: Vec<f64> = (0..x.rows())
            .map(|j| x.row(j).iter().map(|v| v * v).sum::<f64>().powi(r as i32))
            .collect();
        Ok(weight * pairwise_sum(&rows) / x.rows() as f64)
    })?;
    let bound_scale = s.powf(1.0 / order as f64) * width;
    Ok(RQuantities {
        r,
        r2,
        r1: MomentEstimate::from_samples(r, &values, exact),
        bound_r1: c_r1 * bound_scale,
        bound_r2: c_r2 * bound_scale,
    })
}
