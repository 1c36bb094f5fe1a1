//! Resolved run configuration and the optional TOML config file.
//!
//! Precedence for shared settings: command-line flags, then `OSE_SEED` /
//! `OSE_THREADS`, then the config file, then built-in defaults.

use std::path::{Path, PathBuf};

use ose_core::bench::BenchConfig;
use ose_core::moments::Normalization;
use ose_core::planner::{EpsExponent, PlanConstants, PlanMode};
use ose_core::sketch::SketchKind;
use ose_core::verify::TestMatrixKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// Where the orthonormal `U` comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum MatrixSource {
    Generated {
        #[serde(flatten)]
        kind: TestMatrixKind,
        n: usize,
        d: usize,
    },
    /// A Matrix Market file, orthonormalized on load.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanParams {
    pub d: usize,
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub mode: PlanMode,
    pub k: Option<u32>,
    pub theta: Option<f64>,
    pub eps_exponent: EpsExponent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchParams {
    pub kind: SketchKind,
    pub m: usize,
    pub n: usize,
    pub s: usize,
    /// Also write the sketch as a Matrix Market coordinate file.
    pub mm_path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyParams {
    pub matrix: MatrixSource,
    pub kind: SketchKind,
    /// Grid of sketch dimensions; the sweep is the product `m × s`.
    pub m: Vec<usize>,
    pub s: Vec<usize>,
    /// When set, the grid is replaced by the planner's `(m, s)`.
    pub plan_mode: Option<PlanMode>,
    pub trials: usize,
    pub eps: f64,
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentTarget {
    /// `E tr(UᵀSᵀSU - pm·I)^{2q}`.
    Embedding,
    /// `E tr|(S₁U)ᵀ(S₂U)|^{2q}`.
    Decoupled,
    /// Both sides of the decoupling inequality.
    Decoupling,
    /// The `R₁`, `R₂` quantities.
    R,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentParams {
    pub matrix: MatrixSource,
    pub m: usize,
    pub s: usize,
    pub q: u32,
    pub target: MomentTarget,
    pub exact: bool,
    pub trials: usize,
    pub normalization: Normalization,
    pub c_r1: f64,
    pub c_r2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressParams {
    pub a_path: PathBuf,
    pub b_path: PathBuf,
    pub kind: SketchKind,
    pub m: usize,
    pub s: usize,
    /// When set, emit the reduced instance for an external solver instead of
    /// solving it.
    pub reduce_eps: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "command")]
pub enum CommandConfig {
    Plan(PlanParams),
    Sketch(SketchParams),
    Verify(VerifyParams),
    Moments(MomentParams),
    Regress(RegressParams),
    Bench(BenchParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchParams {
    pub nnz: Vec<usize>,
    pub m: usize,
    pub d: usize,
    pub s: usize,
    pub per_row: usize,
    pub repeats: usize,
}

impl BenchParams {
    pub fn to_core(&self, seed: u64) -> BenchConfig {
        BenchConfig {
            nnz: self.nnz.clone(),
            m: self.m,
            d: self.d,
            s: self.s,
            per_row: self.per_row,
            repeats: self.repeats,
            seed,
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker-thread hint; results do not depend on it.
    pub threads: Option<usize>,
    pub format: OutputFormat,
    pub constants: PlanConstants,
    #[serde(flatten)]
    pub command: CommandConfig,
}

/// Contents of a `--config` TOML file. Every key is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub format: Option<OutputFormat>,
    pub constants: Option<PlanConstants>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_config_round_trips() {
        let cfg = FileConfig {
            seed: Some(9),
            threads: Some(3),
            format: Some(OutputFormat::Csv),
            constants: Some(PlanConstants {
                c_basic2: 0.005,
                ..PlanConstants::default()
            }),
        };
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(FileConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_constants_keep_defaults() {
        let cfg = FileConfig::parse("seed = 4\n[constants]\nc_basic1 = 4.0\n").unwrap();
        let c = cfg.constants.unwrap();
        assert_eq!((c.c_basic1, c.c_basic2), (4.0, 1.0));
        assert!(FileConfig::parse("sede = 4\n").is_err());
    }

    #[test]
    fn run_config_round_trips_through_json() {
        let cfg = RunConfig {
            seed: 1,
            threads: None,
            format: OutputFormat::Json,
            constants: PlanConstants::default(),
            command: CommandConfig::Verify(VerifyParams {
                matrix: MatrixSource::Generated {
                    kind: TestMatrixKind::ClusteredDuplicates { group_size: 4 },
                    n: 64,
                    d: 4,
                },
                kind: SketchKind::Osnap,
                m: vec![16, 32],
                s: vec![2],
                plan_mode: None,
                trials: 10,
                eps: 0.5,
                delta: 0.1,
            }),
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}
