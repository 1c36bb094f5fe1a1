//! Executes a resolved [`RunConfig`].

use std::path::Path;

use ose_core::linalg::{orthonormalize, OrthonormalBasis};
use ose_core::moments::{decoupled_moment, decoupling_inequality_check, embedding_moment, r_quantities, EstimatorMode};
use ose_core::planner::{plan, PlanInputs};
use ose_core::regress::{reduce, sketch_and_solve, DesignMatrix, RegressionProblem};
use ose_core::sketch::{Sketch, SketchKind, SketchSpec};
use ose_core::verify::{make_test_matrix, run_embedding_trials, TestMatrixSpec};
use ose_core::OseError;

use crate::config::{CommandConfig, MatrixSource, MomentTarget, RunConfig};
use crate::error::{CliError, CliResult};
use crate::mm::{format_matrix_market, read_matrix_market, read_vector, MatrixData};
use crate::report::{from_json, Payload, ReportEnvelope, SketchPayload};

fn spec_for(kind: SketchKind, m: usize, n: usize, s: usize, seed: u64) -> CliResult<SketchSpec> {
    Ok(match kind {
        SketchKind::Osnap => SketchSpec::osnap(m, n, s, seed)?,
        SketchKind::Countsketch => {
            if s != 1 {
                return Err(OseError::Parameter(format!("countsketch has s = 1, got s = {s}")).into());
            }
            SketchSpec::countsketch(m, n, seed)?
        }
        SketchKind::Gaussian => SketchSpec::gaussian(m, n, seed)?,
    })
}

pub fn load_basis(source: &MatrixSource, seed: u64) -> CliResult<OrthonormalBasis> {
    match source {
        MatrixSource::Generated { kind, n, d } => Ok(make_test_matrix(&TestMatrixSpec {
            kind: *kind,
            n: *n,
            d: *d,
            seed,
        })?),
        MatrixSource::File { path } => Ok(orthonormalize(&read_matrix_market(path)?.to_dense())?),
    }
}

/// Runs the configured command on a pool of `threads` workers (all cores when
/// unset).
pub fn execute(cfg: &RunConfig) -> CliResult<Payload> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        if t == 0 {
            return Err(OseError::Parameter("threads must be at least 1".into()).into());
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;
    pool.install(|| execute_inner(cfg))
}

fn execute_inner(cfg: &RunConfig) -> CliResult<Payload> {
    let seed = cfg.seed;
    match &cfg.command {
        CommandConfig::Plan(p) => {
            let inputs = PlanInputs {
                d: p.d,
                n: p.n,
                eps: p.eps,
                delta: p.delta,
                k: p.k,
                theta: p.theta,
                constants: cfg.constants,
                eps_exponent: p.eps_exponent,
            };
            Ok(Payload::Plan(plan(&inputs, p.mode)?))
        }
        CommandConfig::Sketch(p) => {
            let spec = spec_for(p.kind, p.m, p.n, p.s, seed)?;
            let triplets = match Sketch::generate(&spec)? {
                Sketch::Osnap(sk) => sk.triplets(),
                Sketch::Gaussian(g) => {
                    let e = &g.entries;
                    let mut t = Vec::with_capacity(e.rows() * e.cols());
                    for j in 0..e.cols() {
                        for i in 0..e.rows() {
                            t.push((i, j, e[(i, j)]));
                        }
                    }
                    t
                }
            };
            if let Some(path) = &p.mm_path {
                std::fs::write(path, format_matrix_market(spec.m, spec.n, &triplets))
                    .map_err(|e| CliError::io(path, e))?;
            }
            Ok(Payload::Sketch(SketchPayload { spec, triplets }))
        }
        CommandConfig::Verify(p) => {
            let u = load_basis(&p.matrix, seed)?;
            let grid: Vec<(usize, usize)> = match p.plan_mode {
                Some(mode) => {
                    let mut inputs = PlanInputs::new(u.d(), u.n(), p.eps, p.delta);
                    inputs.constants = cfg.constants;
                    let r = plan(&inputs, mode)?;
                    vec![(r.m, r.s)]
                }
                None => p.m.iter().flat_map(|&m| p.s.iter().map(move |&s| (m, s))).collect(),
            };
            if grid.is_empty() {
                return Err(OseError::Parameter("verify needs at least one (m, s) grid point".into()).into());
            }
            let mut reports = Vec::with_capacity(grid.len());
            for (m, s) in grid {
                let spec = spec_for(p.kind, m, u.n(), s, seed)?;
                reports.push(run_embedding_trials(&u, &spec, p.trials, p.eps, p.delta)?);
            }
            if reports.len() == 1 {
                Ok(Payload::Embedding(reports.pop().expect("one report")))
            } else {
                Ok(Payload::Sweep(reports))
            }
        }
        CommandConfig::Moments(p) => {
            let u = load_basis(&p.matrix, seed)?;
            let spec = SketchSpec::osnap(p.m, u.n(), p.s, seed)?;
            let mode = if p.exact {
                EstimatorMode::Exact
            } else {
                EstimatorMode::MonteCarlo { trials: p.trials }
            };
            Ok(match p.target {
                MomentTarget::Embedding => Payload::Moment(embedding_moment(&u, &spec, p.q, mode, p.normalization)?),
                MomentTarget::Decoupled => Payload::Moment(decoupled_moment(&u, &spec, p.q, mode)?),
                MomentTarget::Decoupling => Payload::Decoupling(decoupling_inequality_check(&u, &spec, p.q, mode)?),
                MomentTarget::R => Payload::RQuantities(r_quantities(&u, &spec, p.q, mode, p.c_r1, p.c_r2)?),
            })
        }
        CommandConfig::Regress(p) => {
            let a = match read_matrix_market(&p.a_path)? {
                MatrixData::Dense(a) => DesignMatrix::Dense(a),
                MatrixData::Sparse(a) => DesignMatrix::Sparse(a),
            };
            let b = read_vector(&p.b_path)?;
            let prob = RegressionProblem::new(a, b)?;
            let spec = spec_for(p.kind, p.m, prob.n(), p.s, seed)?;
            Ok(match p.reduce_eps {
                Some(eps) => Payload::Reduction(reduce(&prob, &spec, eps)?),
                None => Payload::Regression(sketch_and_solve(&prob, &spec)?),
            })
        }
        CommandConfig::Bench(p) => Ok(Payload::Bench(ose_core::bench::nnz_scaling(&p.to_core(seed))?)),
    }
}

/// Outcome of re-running a saved report.
pub struct Replay {
    pub envelope: ReportEnvelope,
    /// `None` for payloads that are not expected to be reproducible.
    pub matches: Option<bool>,
}

/// Re-runs the configuration echoed in a JSON report and compares payloads
/// through their serialized form.
pub fn replay(path: &Path, threads: Option<usize>) -> CliResult<Replay> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let original = from_json(&text)?;
    let mut config = original.config.clone();
    if threads.is_some() {
        config.threads = threads;
    }
    let payload = execute(&config)?;
    let matches = if original.payload.is_deterministic() {
        let ser = |p: &Payload| serde_json::to_string(p).map_err(|e| CliError::Serialize(e.to_string()));
        Some(ser(&original.payload)? == ser(&payload)?)
    } else {
        None
    };
    Ok(Replay {
        envelope: ReportEnvelope::new(original.config, payload),
        matches,
    })
}
