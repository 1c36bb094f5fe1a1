//! Report envelopes and their JSON / CSV serializations.
//!
//! JSON floats use the shortest representation that parses back to the same
//! value. CSV output starts with a `# ose-csv v1 <type>` comment line,
//! followed by a header row; floats are written with 17 significant digits.
//!
//! CSV schemas by payload type:
//!
//! | type | columns |
//! |---|---|
//! | plan | mode, d, n, eps, delta, q, q_int, m_unadjusted, m, s, s_required, p, K, k_used, theta_used, prefactor, term_theta_q, term_q52, term_q4, total, precondition_ok |
//! | sketch | row, col, value (0-based) |
//! | embedding, sweep | kind, m, n, s, seed, trials, failures, failure_rate, ci_lower, ci_upper, consistent_with_delta, certified, mean_eps_hat, median_eps_hat, max_eps_hat |
//! | moment | q, raw_mean, root, stderr, root_stderr, trials, exact |
//! | decoupling | q, lhs_raw, lhs_stderr, rhs_raw, rhs_stderr, lhs_root, rhs_root, ratio, ratio_stderr, trials, exact |
//! | r_quantities | r, r2, r1_raw, r1_root, r1_stderr, bound_r1, bound_r2 |
//! | regression | index, x_hat, then one row per scalar: sketched_objective, exact_objective_at_xhat, exact_optimum, ratio, m, s, seed |
//! | reduction | a_1 .. a_d, b (one row per sketched row), then eps_tilde as a comment |
//! | bench | nnz, n, seconds, ratio_to_previous |

use std::io::Write;

use ose_core::bench::BenchRow;
use ose_core::moments::{DecouplingCheck, MomentEstimate, RQuantities};
use ose_core::planner::PlanResult;
use ose_core::regress::{ReducedProblem, RegressionResult};
use ose_core::sketch::SketchSpec;
use ose_core::verify::EmbeddingReport;
use serde::{Deserialize, Serialize};

use crate::config::{OutputFormat, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchPayload {
    pub spec: SketchSpec,
    /// 0-based `(row, col, value)` sorted by column, then row.
    pub triplets: Vec<(usize, usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "data")]
pub enum Payload {
    Plan(PlanResult),
    Sketch(SketchPayload),
    Embedding(EmbeddingReport),
    Sweep(Vec<EmbeddingReport>),
    Moment(MomentEstimate),
    Decoupling(DecouplingCheck),
    RQuantities(RQuantities),
    Regression(RegressionResult),
    Reduction(ReducedProblem),
    Bench(Vec<BenchRow>),
}

impl Payload {
    pub fn type_name(&self) -> &'static str {
        match self {
            Payload::Plan(_) => "plan",
            Payload::Sketch(_) => "sketch",
            Payload::Embedding(_) => "embedding",
            Payload::Sweep(_) => "sweep",
            Payload::Moment(_) => "moment",
            Payload::Decoupling(_) => "decoupling",
            Payload::RQuantities(_) => "r_quantities",
            Payload::Regression(_) => "regression",
            Payload::Reduction(_) => "reduction",
            Payload::Bench(_) => "bench",
        }
    }

    /// Whether a replay must reproduce this payload exactly. Timings cannot.
    pub fn is_deterministic(&self) -> bool {
        !matches!(self, Payload::Bench(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub tool_version: String,
    pub config: RunConfig,
    /// RFC 3339, UTC.
    pub timestamp: String,
    pub payload: Payload,
}

impl ReportEnvelope {
    pub fn new(config: RunConfig, payload: Payload) -> Self {
        ReportEnvelope {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            timestamp: chrono::Utc::now().to_rfc3339(),
            payload,
        }
    }
}

pub fn to_json(env: &ReportEnvelope) -> CliResult<String> {
    let mut text = serde_json::to_string_pretty(env).map_err(|e| CliError::Serialize(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn from_json(text: &str) -> CliResult<ReportEnvelope> {
    serde_json::from_str(text).map_err(|e| CliError::Serialize(format!("cannot read report: {e}")))
}

pub fn write_report(env: &ReportEnvelope, format: OutputFormat) -> CliResult<Vec<u8>> {
    match format {
        OutputFormat::Json => Ok(to_json(env)?.into_bytes()),
        OutputFormat::Csv => to_csv(&env.payload),
    }
}

fn f(v: f64) -> String {
    format!("{v:.16e}")
}

fn embedding_row(r: &EmbeddingReport) -> Vec<String> {
    vec![
        serde_plain(&r.spec.kind),
        r.spec.m.to_string(),
        r.spec.n.to_string(),
        r.spec.s.to_string(),
        r.spec.seed.to_string(),
        r.trials.to_string(),
        r.failures.to_string(),
        f(r.failure_rate),
        f(r.ci_lower),
        f(r.ci_upper),
        r.consistent_with_delta.to_string(),
        r.certified.to_string(),
        f(r.mean_eps_hat),
        f(r.median_eps_hat),
        f(r.max_eps_hat),
    ]
}

fn serde_plain<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

const EMBEDDING_HEADER: [&str; 15] = [
    "kind",
    "m",
    "n",
    "s",
    "seed",
    "trials",
    "failures",
    "failure_rate",
    "ci_lower",
    "ci_upper",
    "consistent_with_delta",
    "certified",
    "mean_eps_hat",
    "median_eps_hat",
    "max_eps_hat",
];

pub fn to_csv(payload: &Payload) -> CliResult<Vec<u8>> {
    let mut out = Vec::new();
    let _ = writeln!(out, "# ose-csv v1 {}", payload.type_name());
    let mut rows: Vec<Vec<String>> = Vec::new();
    let header: Vec<String>;
    match payload {
        Payload::Plan(p) => {
            header = [
                "mode",
                "d",
                "n",
                "eps",
                "delta",
                "q",
                "q_int",
                "m_unadjusted",
                "m",
                "s",
                "s_required",
                "p",
                "K",
                "k_used",
                "theta_used",
                "prefactor",
                "term_theta_q",
                "term_q52",
                "term_q4",
                "total",
                "precondition_ok",
            ]
            .map(String::from)
            .to_vec();
            let t = &p.bound_terms;
            rows.push(vec![
                serde_plain(&p.mode),
                p.d.to_string(),
                p.n.to_string(),
                f(p.eps),
                f(p.delta),
                f(p.q),
                p.q_int.to_string(),
                p.m_unadjusted.to_string(),
                p.m.to_string(),
                p.s.to_string(),
                f(p.s_required),
                f(p.p),
                f(p.k_value),
                p.k_used.to_string(),
                f(p.theta_used),
                f(t.prefactor),
                f(t.term_theta_q),
                f(t.term_q52),
                f(t.term_q4),
                f(t.total),
                t.precondition_ok.to_string(),
            ]);
        }
        Payload::Sketch(sk) => {
            header = ["row", "col", "value"].map(String::from).to_vec();
            rows.extend(
                sk.triplets
                    .iter()
                    .map(|&(i, j, v)| vec![i.to_string(), j.to_string(), f(v)]),
            );
        }
        Payload::Embedding(r) => {
            header = EMBEDDING_HEADER.map(String::from).to_vec();
            rows.push(embedding_row(r));
        }
        Payload::Sweep(rs) => {
            header = EMBEDDING_HEADER.map(String::from).to_vec();
            rows.extend(rs.iter().map(embedding_row));
        }
        Payload::Moment(m) => {
            header = ["q", "raw_mean", "root", "stderr", "root_stderr", "trials", "exact"]
                .map(String::from)
                .to_vec();
            rows.push(vec![
                m.q.to_string(),
                f(m.raw_mean),
                f(m.root),
                f(m.stderr),
                f(m.root_stderr),
                m.trials.to_string(),
                m.exact.to_string(),
            ]);
        }
        Payload::Decoupling(c) => {
            header = [
                "q",
                "lhs_raw",
                "lhs_stderr",
                "rhs_raw",
                "rhs_stderr",
                "lhs_root",
                "rhs_root",
                "ratio",
                "ratio_stderr",
                "trials",
                "exact",
            ]
            .map(String::from)
            .to_vec();
            rows.push(vec![
                c.q.to_string(),
                f(c.lhs.raw_mean),
                f(c.lhs.stderr),
                f(c.rhs.raw_mean),
                f(c.rhs.stderr),
                f(c.lhs_root),
                f(c.rhs_root),
                f(c.ratio),
                f(c.ratio_stderr),
                c.lhs.trials.to_string(),
                c.lhs.exact.to_string(),
            ]);
        }
        Payload::RQuantities(r) => {
            header = ["r", "r2", "r1_raw", "r1_root", "r1_stderr", "bound_r1", "bound_r2"]
                .map(String::from)
                .to_vec();
            rows.push(vec![
                r.r.to_string(),
                f(r.r2),
                f(r.r1.raw_mean),
                f(r.r1.root),
                f(r.r1.stderr),
                f(r.bound_r1),
                f(r.bound_r2),
            ]);
        }
        Payload::Regression(r) => {
            header = ["quantity", "value"].map(String::from).to_vec();
            for (i, x) in r.x_hat.iter().enumerate() {
                rows.push(vec![format!("x_hat[{i}]"), f(*x)]);
            }
            rows.push(vec!["sketched_objective".into(), f(r.sketched_objective)]);
            rows.push(vec!["exact_objective_at_xhat".into(), f(r.exact_objective_at_xhat)]);
            rows.push(vec!["exact_optimum".into(), f(r.exact_optimum)]);
            rows.push(vec!["ratio".into(), f(r.ratio)]);
            rows.push(vec!["m".into(), r.spec.m.to_string()]);
            rows.push(vec!["s".into(), r.spec.s.to_string()]);
            rows.push(vec!["seed".into(), r.spec.seed.to_string()]);
        }
        Payload::Reduction(red) => {
            let _ = writeln!(out, "# eps_tilde {}", f(red.eps_tilde));
            let d = red.a_tilde.cols();
            header = (1..=d).map(|j| format!("a_{j}")).chain(["b".to_string()]).collect();
            for i in 0..red.a_tilde.rows() {
                let mut row: Vec<String> = red.a_tilde.row(i).iter().map(|v| f(*v)).collect();
                row.push(f(red.b_tilde[i]));
                rows.push(row);
            }
        }
        Payload::Bench(b) => {
            header = ["nnz", "n", "seconds", "ratio_to_previous"].map(String::from).to_vec();
            rows.extend(b.iter().map(|r| {
                vec![
                    r.nnz.to_string(),
                    r.n.to_string(),
                    f(r.seconds),
                    r.ratio_to_previous.map(f).unwrap_or_default(),
                ]
            }));
        }
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let map = |e: csv::Error| CliError::Serialize(e.to_string());
        w.write_record(&header).map_err(map)?;
        for r in &rows {
            w.write_record(r).map_err(map)?;
        }
        w.flush().map_err(|e| CliError::Serialize(e.to_string()))?;
    }
    Ok(out)
}
