//! Embedding trials: draw `Π`, measure the extreme singular values of `ΠU`
//! and count distortions above the target.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OseError, Result};
use crate::linalg::{apply_sketch_dense, gram_extreme_singular_values, orthonormalize, DenseMatrix, OrthonormalBasis};
use crate::rng::{column_stream, mix_seed};
use crate::sketch::{Sketch, SketchSpec};
use crate::stats::{clopper_pearson, mean_and_stderr, median};

/// Confidence level of the failure-rate interval.
pub const CONFIDENCE_ALPHA: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TestMatrixKind {
    /// Orthonormalized i.i.d. Gaussian matrix.
    HaarOrthonormal,
    /// `[I_d; 0]`: all leverage on `d` rows.
    IdentityBlock,
    /// First `⌊d/2⌋` columns are coordinate vectors, the rest dense.
    CoherentSpike,
    /// Blocks of `group_size` identical rows.
    ClusteredDuplicates { group_size: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestMatrixSpec {
    #[serde(flatten)]
    pub kind: TestMatrixKind,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
}

fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut data = vec![0.0; rows * cols];
    for i in 0..rows {
        let mut rng = column_stream(seed, i as u64);
        for v in &mut data[i * cols..(i + 1) * cols] {
            *v = rng.sample(StandardNormal);
        }
    }
    DenseMatrix::from_row_major(rows, cols, data).expect("finite gaussian draws")
}

/// Builds an `n x d` orthonormal test basis.
pub fn make_test_matrix(spec: &TestMatrixSpec) -> Result<OrthonormalBasis> {
    let (n, d) = (spec.n, spec.d);
    if d == 0 || n < d {
        return Err(OseError::param(format!(
            "test matrix needs n >= d >= 1, got n={n}, d={d}"
        )));
    }
    match spec.kind {
        TestMatrixKind::HaarOrthonormal => orthonormalize(&gaussian_matrix(n, d, spec.seed)),
        TestMatrixKind::IdentityBlock => {
            OrthonormalBasis::from_orthonormal(DenseMatrix::from_fn(n, d, |i, j| if i == j { 1.0 } else { 0.0 }))
        }
        TestMatrixKind::CoherentSpike => {
            let spikes = d / 2;
            let g = gaussian_matrix(n, d, spec.seed);
            let a = DenseMatrix::from_fn(n, d, |i, j| {
                if j < spikes {
                    if i == j {
                        1.0
                    } else {
                        0.0
                    }
                } else if i < spikes {
                    0.0
                } else {
                    g[(i, j)]
                }
            });
            orthonormalize(&a)
        }
        TestMatrixKind::ClusteredDuplicates { group_size } => {
            if group_size == 0 {
                return Err(OseError::param("group size must be positive"));
            }
            let groups = n.div_ceil(group_size);
            if groups < d {
                return Err(OseError::Rank(format!(
                    "{groups} distinct row groups cannot span {d} dimensions"
                )));
            }
            // Orthonormalize the group rows weighted by sqrt(size), then
            // expand, so duplicated rows stay bit-identical.
            let size = |g: usize| (n - g * group_size).min(group_size) as f64;
            let base = gaussian_matrix(groups, d, spec.seed);
            let weighted = DenseMatrix::from_fn(groups, d, |g, j| base[(g, j)] * size(g).sqrt());
            let q = orthonormalize(&weighted)?;
            let q = q.matrix();
            OrthonormalBasis::from_orthonormal(DenseMatrix::from_fn(n, d, |i, j| {
                let g = i / group_size;
                q[(g, j)] / size(g).sqrt()
            }))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub s_min: f64,
    pub s_max: f64,
    /// `max(1 - s_min, s_max - 1)`.
    pub eps_hat: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub spec: SketchSpec,
    pub eps: f64,
    pub delta: f64,
    pub trials: usize,
    pub failures: usize,
    pub failure_rate: f64,
    /// Clopper–Pearson 95% interval for the failure rate.
    pub ci_lower: f64,
    pub ci_upper: f64,
    /// The interval is consistent with a failure rate of at most `δ`
    /// (lower bound `≤ δ`).
    pub consistent_with_delta: bool,
    /// The failure rate is certified below `δ` (upper bound `≤ δ`).
    pub certified: bool,
    pub mean_eps_hat: f64,
    pub median_eps_hat: f64,
    pub max_eps_hat: f64,
    /// Per-trial outcomes in trial order.
    pub outcomes: Vec<TrialOutcome>,
}

/// Seed of trial `t` under master seed `seed`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    mix_seed(seed, trial)
}

fn one_trial(u: &OrthonormalBasis, spec: &SketchSpec) -> Result<TrialOutcome> {
    let sketch = Sketch::generate(spec)?;
    let b = apply_sketch_dense(&sketch, u.matrix())?;
    let (s_min, s_max) = gram_extreme_singular_values(&b)?;
    Ok(TrialOutcome {
        s_min,
        s_max,
        eps_hat: (1.0 - s_min).max(s_max - 1.0).max(0.0),
    })
}

/// Runs `trials` independent sketches against a fixed `U`.
pub fn run_embedding_trials(
    u: &OrthonormalBasis,
    spec: &SketchSpec,
    trials: usize,
    eps: f64,
    delta: f64,
) -> Result<EmbeddingReport> {
    spec.validate()?;
    if trials == 0 {
        return Err(OseError::param("at least one trial is required"));
    }
    if spec.n != u.n() {
        return Err(OseError::shape(format!(
            "sketch has n={} columns but U has {} rows",
            spec.n,
            u.n()
        )));
    }
    if !(eps > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(OseError::param("eps must be positive and delta in (0, 1)"));
    }
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| one_trial(u, &spec.with_seed(trial_seed(spec.seed, t as u64))))
        .collect::<Result<_>>()?;
    Ok(summarize(*spec, eps, delta, outcomes))
}

fn summarize(spec: SketchSpec, eps: f64, delta: f64, outcomes: Vec<TrialOutcome>) -> EmbeddingReport {
    let trials = outcomes.len();
    let failures = outcomes.iter().filter(|o| o.eps_hat > eps).count();
    let (ci_lower, ci_upper) = clopper_pearson(failures as u64, trials as u64, CONFIDENCE_ALPHA);
    let eps_hats: Vec<f64> = outcomes.iter().map(|o| o.eps_hat).collect();
    let (mean_eps_hat, _) = mean_and_stderr(&eps_hats);
    EmbeddingReport {
        spec,
        eps,
        delta,
        trials,
        failures,
        failure_rate: failures as f64 / trials as f64,
        ci_lower,
        ci_upper,
        consistent_with_delta: ci_lower <= delta,
        certified: ci_upper <= delta,
        mean_eps_hat,
        median_eps_hat: median(&eps_hats),
        max_eps_hat: eps_hats.iter().copied().fold(0.0, f64::max),
        outcomes,
    }
}

/// One report per `(m, s)` grid point, in grid order. `base` supplies the
/// kind, `n` and seed.
pub fn sweep(
    u: &OrthonormalBasis,
    base: &SketchSpec,
    grid: &[(usize, usize)],
    trials: usize,
    eps: f64,
    delta: f64,
) -> Result<Vec<EmbeddingReport>> {
    if grid.is_empty() {
        return Err(OseError::param("sweep grid is empty"));
    }
    grid.iter()
        .map(|&(m, s)| {
            let spec = SketchSpec { m, s, ..*base };
            run_embedding_trials(u, &spec, trials, eps, delta)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormality_error;

    #[test]
    fn identity_block_is_exact() {
        let u = make_test_matrix(&TestMatrixSpec {
            kind: TestMatrixKind::IdentityBlock,
            n: 100,
            d: 4,
            seed: 0,
        })
        .unwrap();
        let mut g = u.matrix().gram();
        g.sub_diagonal(1.0);
        assert!(g.as_slice().iter().all(|v| *v == 0.0));
        for j in 0..4 {
            assert_eq!(u.matrix()[(j, j)], 1.0);
        }
    }

    #[test]
    fn all_kinds_are_orthonormal() {
        let kinds = [
            TestMatrixKind::HaarOrthonormal,
            TestMatrixKind::IdentityBlock,
            TestMatrixKind::CoherentSpike,
            TestMatrixKind::ClusteredDuplicates { group_size: 4 },
        ];
        for kind in kinds {
            let u = make_test_matrix(&TestMatrixSpec {
                kind,
                n: 50,
                d: 5,
                seed: 1,
            })
            .unwrap();
            assert_eq!((u.n(), u.d()), (50, 5));
            assert!(orthonormality_error(u.matrix()) <= 1e-10);
        }
    }

    #[test]
    fn clustered_rows_are_duplicated() {
        let u = make_test_matrix(&TestMatrixSpec {
            kind: TestMatrixKind::ClusteredDuplicates { group_size: 3 },
            n: 30,
            d: 6,
            seed: 2,
        })
        .unwrap();
        assert_eq!(u.matrix().row(0), u.matrix().row(2));
        assert_ne!(u.matrix().row(2), u.matrix().row(3));
        let too_few = TestMatrixSpec {
            kind: TestMatrixKind::ClusteredDuplicates { group_size: 10 },
            n: 30,
            d: 6,
            seed: 2,
        };
        assert!(matches!(make_test_matrix(&too_few), Err(OseError::Rank(_))));
    }

    #[test]
    fn zero_trials_is_an_error() {
        let u = make_test_matrix(&TestMatrixSpec {
            kind: TestMatrixKind::IdentityBlock,
            n: 10,
            d: 2,
            seed: 0,
        })
        .unwrap();
        let spec = SketchSpec::osnap(8, 10, 2, 0).unwrap();
        assert!(matches!(
            run_embedding_trials(&u, &spec, 0, 0.5, 0.1),
            Err(OseError::Parameter(_))
        ));
        let wrong = SketchSpec::osnap(8, 11, 2, 0).unwrap();
        assert!(matches!(
            run_embedding_trials(&u, &wrong, 3, 0.5, 0.1),
            Err(OseError::Shape(_))
        ));
    }

    #[test]
    fn single_point_sweep_matches_direct_run() {
        let u = make_test_matrix(&TestMatrixSpec {
            kind: TestMatrixKind::HaarOrthonormal,
            n: 64,
            d: 3,
            seed: 4,
        })
        .unwrap();
        let spec = SketchSpec::osnap(32, 64, 4, 17).unwrap();
        let direct = run_embedding_trials(&u, &spec, 20, 0.5, 0.1).unwrap();
        let swept = sweep(&u, &spec, &[(32, 4)], 20, 0.5, 0.1).unwrap();
        assert_eq!(swept, vec![direct]);
        assert!(sweep(&u, &spec, &[], 20, 0.5, 0.1).is_err());
    }

    #[test]
    fn report_invariants() {
        let u = make_test_matrix(&TestMatrixSpec {
            kind: TestMatrixKind::CoherentSpike,
            n: 80,
            d: 6,
            seed: 9,
        })
        .unwrap();
        let spec = SketchSpec::osnap(40, 80, 2, 3).unwrap();
        let r = run_embedding_trials(&u, &spec, 50, 0.3, 0.1).unwrap();
        assert!(r.failures <= r.trials);
        for o in &r.outcomes {
            assert!(o.s_min <= o.s_max && o.eps_hat >= 0.0);
        }
        assert!(r.ci_lower <= r.failure_rate && r.failure_rate <= r.ci_upper);
    }
}
