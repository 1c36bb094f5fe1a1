//! Command-line grammar and its resolution into a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ose_core::moments::Normalization;
use ose_core::planner::{EpsExponent, PlanConstants, PlanMode};
use ose_core::sketch::SketchKind;
use ose_core::verify::TestMatrixKind;
use serde::de::DeserializeOwned;

use crate::config::{
    BenchParams, CommandConfig, FileConfig, MatrixSource, MomentParams, MomentTarget, OutputFormat, PlanParams,
    RegressParams, RunConfig, SketchParams, VerifyParams, DEFAULT_SEED,
};
use crate::error::CliResult;

/// Parses a snake_case (or kebab-case) name of a serde enum.
fn serde_value<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| format!("unrecognized value `{s}`"))
}

#[derive(Debug, Parser)]
#[command(
    name = "ose",
    version,
    about = "Sparse oblivious subspace embeddings: planning, verification, moments, regression"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    /// Re-run the configuration echoed in a JSON report and check that the
    /// payload is reproduced.
    #[arg(long, value_name = "REPORT")]
    pub replay: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed.
    #[arg(long, global = true, env = "OSE_SEED")]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true, env = "OSE_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// TOML file with seed, threads, format and [constants].
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long, short, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub constants: ConstantArgs,
}

/// Overrides for the planner constants.
#[derive(Debug, Default, Args)]
pub struct ConstantArgs {
    /// Scale of the theta precondition.
    #[arg(long, global = true, help_heading = "Planner constants")]
    pub c1: Option<f64>,
    /// Inner rate of the theta precondition.
    #[arg(long, global = true, help_heading = "Planner constants")]
    pub c2: Option<f64>,
    /// Inner rate of the sparsity prefactor.
    #[arg(long, global = true, help_heading = "Planner constants")]
    pub c3: Option<f64>,
    /// Dimension constant, cor_basic.
    #[arg(long, global = true, help_heading = "Planner constants")]
    pub c_basic1: Option<f64>,
    /// Sparsity constant, cor_basic.
    #[arg(long, global = true, help_heading = "Planner constants")]
    pub c_basic2: Option<f64>,
    /// Dimension constant, cor_subpolylog.
    #[arg(long, global = true, help_heading = "Planner constants")]
    pub c_sub1: Option<f64>,
    /// Sparsity constant, cor_subpolylog.
    #[arg(long, global = true, help_heading = "Planner constants")]
    pub c_sub2: Option<f64>,
}

impl ConstantArgs {
    fn apply(&self, c: &mut PlanConstants) {
        let pairs = [
            (self.c1, &mut c.c1),
            (self.c2, &mut c.c2),
            (self.c3, &mut c.c3),
            (self.c_basic1, &mut c.c_basic1),
            (self.c_basic2, &mut c.c_basic2),
            (self.c_sub1, &mut c.c_sub1),
            (self.c_sub2, &mut c.c_sub2),
        ];
        for (flag, slot) in pairs {
            if let Some(v) = flag {
                *slot = v;
            }
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute (m, s) and the bound terms for target (eps, delta).
    Plan(PlanArgs),
    /// Draw one sketch and emit its nonzeros.
    Sketch(SketchArgs),
    /// Run embedding trials, or a sweep over an (m, s) grid.
    Verify(VerifyArgs),
    /// Trace-moment estimators, the decoupling check and the R quantities.
    Moments(MomentArgs),
    /// Sketch-and-solve least squares.
    Regress(RegressArgs),
    /// Time the sparse sketch kernel as nnz(A) grows.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub d: usize,
    /// Ambient dimension; echoed only. Defaults to d.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub delta: f64,
    /// theorem12, cor_basic or cor_subpolylog.
    #[arg(long, value_parser = serde_value::<PlanMode>, default_value = "cor_basic")]
    pub mode: PlanMode,
    /// Decoupling depth; automatic when omitted.
    #[arg(long)]
    pub k: Option<u32>,
    /// Dimension slack; automatic when omitted.
    #[arg(long)]
    pub theta: Option<f64>,
    /// q, two_q_minus_one or log_d_over_delta.
    #[arg(long, value_parser = serde_value::<EpsExponent>, default_value = "log_d_over_delta")]
    pub eps_exponent: EpsExponent,
}

#[derive(Debug, Args)]
pub struct SketchArgs {
    /// osnap, countsketch or gaussian.
    #[arg(long, value_parser = serde_value::<SketchKind>, default_value = "osnap")]
    pub kind: SketchKind,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub s: usize,
    /// Also write the sketch in Matrix Market coordinate form.
    #[arg(long, value_name = "FILE")]
    pub mm: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum MatrixKindArg {
    HaarOrthonormal,
    IdentityBlock,
    CoherentSpike,
    ClusteredDuplicates,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    /// Test matrix family for U.
    #[arg(long, value_enum, default_value = "haar_orthonormal")]
    pub matrix: MatrixKindArg,
    /// Rows per group for clustered_duplicates.
    #[arg(long, default_value_t = 4)]
    pub group_size: usize,
    #[arg(long, required_unless_present = "u_file")]
    pub n: Option<usize>,
    #[arg(long, required_unless_present = "u_file")]
    pub d: Option<usize>,
    /// Read A from a Matrix Market file and orthonormalize it.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["n", "d"])]
    pub u_file: Option<PathBuf>,
}

impl MatrixArgs {
    fn source(&self) -> MatrixSource {
        if let Some(path) = &self.u_file {
            return MatrixSource::File { path: path.clone() };
        }
        let kind = match self.matrix {
            MatrixKindArg::HaarOrthonormal => TestMatrixKind::HaarOrthonormal,
            MatrixKindArg::IdentityBlock => TestMatrixKind::IdentityBlock,
            MatrixKindArg::CoherentSpike => TestMatrixKind::CoherentSpike,
            MatrixKindArg::ClusteredDuplicates => TestMatrixKind::ClusteredDuplicates {
                group_size: self.group_size,
            },
        };
        MatrixSource::Generated {
            kind,
            n: self.n.unwrap_or_default(),
            d: self.d.unwrap_or_default(),
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    /// osnap, countsketch or gaussian.
    #[arg(long, value_parser = serde_value::<SketchKind>, default_value = "osnap")]
    pub kind: SketchKind,
    /// Sketch dimensions (comma separated).
    #[arg(long, value_delimiter = ',', required_unless_present = "plan_mode")]
    pub m: Vec<usize>,
    /// Nonzeros per column (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub s: Vec<usize>,
    /// Take (m, s) from the planner in this mode instead of the grid.
    #[arg(long, value_parser = serde_value::<PlanMode>, conflicts_with = "m")]
    pub plan_mode: Option<PlanMode>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum EstimatorArg {
    Embedding,
    Decoupled,
    Decoupling,
    R,
}

#[derive(Debug, Args)]
pub struct MomentArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub s: usize,
    /// Moment order q (the r of the R quantities).
    #[arg(long, default_value_t = 1)]
    pub q: u32,
    #[arg(long, value_enum, default_value = "embedding")]
    pub estimator: EstimatorArg,
    /// Enumerate every sketch instead of sampling.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    /// unscaled or scaled.
    #[arg(long, value_parser = serde_value::<Normalization>, default_value = "unscaled")]
    pub normalization: Normalization,
    #[arg(long, default_value_t = 1.0)]
    pub c_r1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_r2: f64,
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    /// Design matrix, Matrix Market.
    #[arg(long, value_name = "FILE")]
    pub a: PathBuf,
    /// Right-hand side, one value per line.
    #[arg(long, value_name = "FILE")]
    pub b: PathBuf,
    #[arg(long, value_parser = serde_value::<SketchKind>, default_value = "osnap")]
    pub kind: SketchKind,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub s: usize,
    /// Emit the sketched instance for an external solver at this accuracy.
    #[arg(long)]
    pub reduce_eps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "1000000,2000000,4000000,8000000")]
    pub nnz: Vec<usize>,
    #[arg(long, default_value_t = 2048)]
    pub m: usize,
    #[arg(long, default_value_t = 16)]
    pub d: usize,
    #[arg(long, default_value_t = 8)]
    pub s: usize,
    #[arg(long, default_value_t = 4)]
    pub per_row: usize,
    #[arg(long, default_value_t = 7)]
    pub repeats: usize,
}

impl Command {
    fn into_config(self) -> CommandConfig {
        match self {
            Command::Plan(a) => CommandConfig::Plan(PlanParams {
                d: a.d,
                n: a.n.unwrap_or(a.d),
                eps: a.eps,
                delta: a.delta,
                mode: a.mode,
                k: a.k,
                theta: a.theta,
                eps_exponent: a.eps_exponent,
            }),
            Command::Sketch(a) => CommandConfig::Sketch(SketchParams {
                kind: a.kind,
                m: a.m,
                n: a.n,
                s: a.s,
                mm_path: a.mm,
            }),
            Command::Verify(a) => CommandConfig::Verify(VerifyParams {
                matrix: a.matrix.source(),
                kind: a.kind,
                m: a.m,
                s: a.s,
                plan_mode: a.plan_mode,
                trials: a.trials,
                eps: a.eps,
                delta: a.delta,
            }),
            Command::Moments(a) => CommandConfig::Moments(MomentParams {
                matrix: a.matrix.source(),
                m: a.m,
                s: a.s,
                q: a.q,
                target: match a.estimator {
                    EstimatorArg::Embedding => MomentTarget::Embedding,
                    EstimatorArg::Decoupled => MomentTarget::Decoupled,
                    EstimatorArg::Decoupling => MomentTarget::Decoupling,
                    EstimatorArg::R => MomentTarget::R,
                },
                exact: a.exact,
                trials: a.trials,
                normalization: a.normalization,
                c_r1: a.c_r1,
                c_r2: a.c_r2,
            }),
            Command::Regress(a) => CommandConfig::Regress(RegressParams {
                a_path: a.a,
                b_path: a.b,
                kind: a.kind,
                m: a.m,
                s: a.s,
                reduce_eps: a.reduce_eps,
            }),
            Command::Bench(a) => CommandConfig::Bench(BenchParams {
                nnz: a.nnz,
                m: a.m,
                d: a.d,
                s: a.s,
                per_row: a.per_row,
                repeats: a.repeats,
            }),
        }
    }
}

/// Merges flags (already combined with the environment by the parser), the
/// config file and defaults.
pub fn resolve(global: &GlobalArgs, command: Command) -> CliResult<RunConfig> {
    let file = match &global.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let mut constants = file.constants.unwrap_or_default();
    global.constants.apply(&mut constants);
    Ok(RunConfig {
        seed: global.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        threads: global.threads.or(file.threads),
        format: global.format.or(file.format).unwrap_or_default(),
        constants,
        command: command.into_config(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn grammar_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn plan_flags_resolve() {
        let cli = Cli::try_parse_from([
            "ose",
            "plan",
            "--d",
            "1024",
            "--eps",
            "0.1",
            "--delta",
            "0.0009765625",
            "--mode",
            "cor_basic",
            "--c-basic2",
            "0.5",
        ])
        .unwrap();
        let cfg = resolve(&cli.global, cli.command.unwrap()).unwrap();
        assert_eq!(cfg.constants.c_basic2, 0.5);
        match cfg.command {
            CommandConfig::Plan(p) => {
                assert_eq!((p.d, p.n, p.mode), (1024, 1024, PlanMode::CorBasic));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_enum_value_is_rejected() {
        assert!(
            Cli::try_parse_from(["ose", "plan", "--d", "4", "--eps", "0.1", "--delta", "0.1", "--mode", "nope"])
                .is_err()
        );
    }

    #[test]
    fn file_config_is_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ose.toml");
        std::fs::write(
            &path,
            "seed = 5\nthreads = 2\nformat = \"csv\"\n[constants]\nc_basic1 = 4.0\nc_basic2 = 0.25\n",
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let cli = Cli::try_parse_from([
            "ose",
            "--config",
            p,
            "--c-basic2",
            "0.5",
            "plan",
            "--d",
            "8",
            "--eps",
            "0.5",
            "--delta",
            "0.1",
        ])
        .unwrap();
        let cfg = resolve(&cli.global, cli.command.unwrap()).unwrap();
        assert_eq!(cfg.format, OutputFormat::Csv);
        assert_eq!((cfg.constants.c_basic1, cfg.constants.c_basic2), (4.0, 0.5));
        assert_eq!(cfg.threads, Some(2));
        // The seed may come from OSE_SEED in the test environment.
        if std::env::var_os("OSE_SEED").is_none() {
            assert_eq!(cfg.seed, 5);
        }
    }
}
