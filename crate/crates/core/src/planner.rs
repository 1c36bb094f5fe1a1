//! Closed-form dimension and sparsity prescriptions for OSNAP embeddings.
//!
//! All logarithms are natural. With `q = log(d/δ)`:
//!
//! - general trade-off (`Theorem12`): `m = θ(d + q)/ε²` and
//!   `s ≥ exp(exp(c3·k))·(ε^{-(1+1/q)}·(θq + q^{5/2}/θ^{k/2-1/4}) + q⁴/θ^{k+1/2})`,
//!   valid when `θ ≥ c1·exp(exp(c2·k))²`;
//! - constant slack (`CorBasic`): `m = c_basic1(d + q)/ε²`,
//!   `s ≥ c_basic2(q^{5/2}/ε^{1+1/q} + q⁴)`;
//! - sub-polylogarithmic slack (`CorSubpolylog`): `θ = c_sub1·q^{5/(k-1/2)}`,
//!   `m = θ(d + q)/ε²`, `s ≥ c_sub2·q^{5/(k-1/2)}·q/ε^{1+1/q}` with
//!   `k = ⌈h(h(h(h(d/δ)))) + 1⌉`, `h(x) = max(log x, 1)`.
//!
//! The absolute constants are unknown and default to 1.

use serde::{Deserialize, Serialize};

use crate::error::{OseError, Result};

/// Absolute constants of the prescriptions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanConstants {
    /// Scale of the `θ` precondition `θ ≥ c1·exp(exp(c2·k))²`.
    pub c1: f64,
    /// Inner rate of the `θ` precondition.
    pub c2: f64,
    /// Inner rate of the sparsity prefactor `exp(exp(c3·k))`.
    pub c3: f64,
    /// Dimension constant of the constant-slack prescription.
    pub c_basic1: f64,
    /// Sparsity constant of the constant-slack prescription.
    pub c_basic2: f64,
    /// Dimension constant of the sub-polylogarithmic prescription (also the
    /// scale of the automatic `θ`).
    pub c_sub1: f64,
    /// Sparsity constant of the sub-polylogarithmic prescription.
    pub c_sub2: f64,
}

impl Default for PlanConstants {
    fn default() -> Self {
        PlanConstants {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            c_basic1: 1.0,
            c_basic2: 1.0,
            c_sub1: 1.0,
            c_sub2: 1.0,
        }
    }
}

impl PlanConstants {
    fn validate(&self) -> Result<()> {
        let all = [
            self.c1,
            self.c2,
            self.c3,
            self.c_basic1,
            self.c_basic2,
            self.c_sub1,
            self.c_sub2,
        ];
        if all.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(OseError::param("plan constants must be positive and finite"));
        }
        Ok(())
    }
}

/// Which denominator to use in the `ε^{-(1 + 1/x)}` exponent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsExponent {
    /// `x = ⌈log(d/δ)⌉`.
    Q,
    /// `x = 2⌈log(d/δ)⌉ - 1`.
    TwoQMinusOne,
    /// `x = log(d/δ)`.
    #[default]
    LogDOverDelta,
}

impl EpsExponent {
    fn denominator(self, q: f64) -> f64 {
        match self {
            EpsExponent::Q => q.ceil(),
            EpsExponent::TwoQMinusOne => 2.0 * q.ceil() - 1.0,
            EpsExponent::LogDOverDelta => q,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    Theorem12,
    CorBasic,
    CorSubpolylog,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanInputs {
    pub d: usize,
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    /// Decoupling depth; `None` selects `k = ⌈h⁴(d/δ) + 1⌉`.
    pub k: Option<u32>,
    /// Dimension slack; `None` selects `θ = c_sub1·q^{5/(k-1/2)}`.
    pub theta: Option<f64>,
    pub constants: PlanConstants,
    pub eps_exponent: EpsExponent,
}

impl PlanInputs {
    pub fn new(d: usize, n: usize, eps: f64, delta: f64) -> Self {
        PlanInputs {
            d,
            n,
            eps,
            delta,
            k: None,
            theta: None,
            constants: PlanConstants::default(),
            eps_exponent: EpsExponent::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(OseError::param(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(OseError::param(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.d == 0 || self.n == 0 {
            return Err(OseError::param("d and n must be positive"));
        }
        if self.k == Some(0) {
            return Err(OseError::param("k must be a positive integer"));
        }
        if let Some(t) = self.theta {
            if !(t.is_finite() && t > 0.0) {
                return Err(OseError::param(format!("theta must be positive, got {t}")));
            }
        }
        self.constants.validate()
    }
}

/// The summands of a sparsity lower bound. `total = prefactor ·
/// (term_theta_q + term_q52 + term_q4)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    pub prefactor: f64,
    /// `θq/ε^{1+1/x}`.
    pub term_theta_q: f64,
    /// `q^{5/2}/(θ^{k/2-1/4}·ε^{1+1/x})`.
    pub term_q52: f64,
    /// `q⁴/θ^{k+1/2}`.
    pub term_q4: f64,
    pub total: f64,
    /// Whether `θ ≥ c1·exp(exp(c2·k))²` holds.
    pub precondition_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub mode: PlanMode,
    pub d: usize,
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    /// `log(d/δ)`.
    pub q: f64,
    pub q_int: u32,
    /// `⌈θ(d + q)/ε²⌉` (at least `d`) before the divisibility repair.
    pub m_unadjusted: usize,
    pub m: usize,
    pub s: usize,
    /// Real-valued sparsity requirement before rounding and clamping.
    pub s_required: f64,
    pub p: f64,
    #[serde(rename = "K")]
    pub k_value: f64,
    pub bound_terms: BoundTerms,
    pub k_used: u32,
    pub theta_used: f64,
    pub warnings: Vec<String>,
}

fn h(x: f64) -> f64 {
    x.ln().max(1.0)
}

/// `⌈h(h(h(h(x)))) + 1⌉` with `h(x) = max(log x, 1)`.
///
/// Takes `log(d/δ)` rather than `d/δ` so huge ratios do not overflow; the
/// first application of `h` is `max(log(d/δ), 1)`.
pub fn iterated_log_k_from_log(log_ratio: f64) -> u32 {
    let mut v = log_ratio.max(1.0);
    for _ in 0..3 {
        v = h(v);
    }
    (v + 1.0).ceil() as u32
}

/// `⌈h(h(h(h(d/δ)))) + 1⌉` with `h(x) = max(log x, 1)`.
pub fn iterated_log_k(d_over_delta: f64) -> u32 {
    iterated_log_k_from_log(d_over_delta.ln())
}

/// `K(m, d, p, q) = (p·max(m,q)·p·max(d,q) + (pm)^{1/q}·q·(pd + q))^{1/2}`.
#[allow(non_snake_case)]
pub fn compute_K(m: f64, d: f64, p: f64, q: f64) -> f64 {
    k_squared(m, d, p, q).sqrt()
}

pub(crate) fn k_squared(m: f64, d: f64, p: f64, q: f64) -> f64 {
    p * m.max(q) * p * d.max(q) + (p * m).powf(1.0 / q) * q * (p * d + q)
}

/// The general sparsity lower bound, term by term.
pub fn sparsity_lower_bound(
    theta: f64,
    k: u32,
    q: f64,
    eps: f64,
    constants: &PlanConstants,
    exponent: EpsExponent,
) -> BoundTerms {
    let kf = k as f64;
    let prefactor = (constants.c3 * kf).exp().exp();
    let eps_factor = eps.powf(-(1.0 + 1.0 / exponent.denominator(q)));
    let term_theta_q = eps_factor * theta * q;
    let term_q52 = eps_factor * q.powf(2.5) / theta.powf(kf / 2.0 - 0.25);
    let term_q4 = q.powi(4) / theta.powf(kf + 0.5);
    let threshold = constants.c1 * (constants.c2 * kf).exp().exp().powi(2);
    BoundTerms {
        prefactor,
        term_theta_q,
        term_q52,
        term_q4,
        total: prefactor * (term_theta_q + term_q52 + term_q4),
        precondition_ok: theta >= threshold,
    }
}

/// Evaluates a prescription and rounds it to a valid `(m, s)` pair: `s`
/// divides `m`, `1 ≤ s ≤ m`, `m ≥ d`.
pub fn plan(inputs: &PlanInputs, mode: PlanMode) -> Result<PlanResult> {
    inputs.validate()?;
    let c = &inputs.constants;
    let d = inputs.d as f64;
    let q = (inputs.d as f64).ln() - inputs.delta.ln();
    if !(q > 0.0) {
        return Err(OseError::param("log(d/delta) must be positive"));
    }
    let q_int = q.ceil() as u32;
    let eps = inputs.eps;
    let mut warnings = Vec::new();
    if inputs.d <= 10 {
        warnings.push(format!("d = {} <= 10: outside the stated range of the bound", inputs.d));
    }

    let auto_k = || inputs.k.unwrap_or_else(|| iterated_log_k_from_log(q));
    let (k_used, theta_used, terms) = match mode {
        PlanMode::Theorem12 => {
            let k = auto_k();
            let theta = inputs
                .theta
                .unwrap_or_else(|| c.c_sub1 * q.powf(5.0 / (k as f64 - 0.5)));
            let terms = sparsity_lower_bound(theta, k, q, eps, c, inputs.eps_exponent);
            if !terms.precondition_ok {
                warnings.push(format!(
                    "theta = {theta} is below c1*exp(exp(c2*k))^2 for k = {k}; bound evaluated anyway"
                ));
            }
            (k, theta, terms)
        }
        PlanMode::CorBasic => {
            let eps_factor = eps.powf(-(1.0 + 1.0 / inputs.eps_exponent.denominator(q)));
            let term_q52 = eps_factor * q.powf(2.5);
            let term_q4 = q.powi(4);
            let terms = BoundTerms {
                prefactor: c.c_basic2,
                term_theta_q: 0.0,
                term_q52,
                term_q4,
                total: c.c_basic2 * (term_q52 + term_q4),
                precondition_ok: true,
            };
            (inputs.k.unwrap_or(1), c.c_basic1, terms)
        }
        PlanMode::CorSubpolylog => {
            let k = auto_k();
            let slack = q.powf(5.0 / (k as f64 - 0.5));
            let eps_factor = eps.powf(-(1.0 + 1.0 / inputs.eps_exponent.denominator(q)));
            let term = slack * q * eps_factor;
            let terms = BoundTerms {
                prefactor: c.c_sub2,
                term_theta_q: term,
                term_q52: 0.0,
                term_q4: 0.0,
                total: c.c_sub2 * term,
                precondition_ok: true,
            };
            (k, c.c_sub1 * slack, terms)
        }
    };

    let m_real = (theta_used * (d + q) / (eps * eps)).ceil();
    if !(m_real.is_finite() && m_real < u32::MAX as f64) {
        return Err(OseError::param(format!("embedding dimension {m_real} is out of range")));
    }
    let m_unadjusted = (m_real as usize).max(inputs.d);
    let s_required = terms.total;
    let s_min = if s_required.is_finite() {
        s_required.ceil().max(1.0)
    } else {
        f64::INFINITY
    };
    let (m, s) = if s_min >= m_unadjusted as f64 {
        (m_unadjusted, m_unadjusted)
    } else {
        let s = s_min as usize;
        (m_unadjusted.div_ceil(s) * s, s)
    };
    let p = s as f64 / m as f64;
    Ok(PlanResult {
        mode,
        d: inputs.d,
        n: inputs.n,
        eps,
        delta: inputs.delta,
        q,
        q_int,
        m_unadjusted,
        m,
        s,
        s_required,
        p,
        k_value: compute_K(m as f64, d, p, q_int as f64),
        bound_terms: terms,
        k_used,
        theta_used,
        warnings,
    })
}
