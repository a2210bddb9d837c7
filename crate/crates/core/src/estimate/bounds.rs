//! Closed-form bounds: the exponential Chebyshev bracket, the choice of
//! `lambda` and `p_0`, the zero-flow bound and the renormalization threshold.

use serde::{Deserialize, Serialize};

use super::EstimateError;

/// Inputs of the Chebyshev bracket.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    pub p: f64,
    pub epsilon: f64,
    pub d: usize,
    pub lambda: f64,
    /// Growth constant of the lattice animals being counted.
    pub c: f64,
    /// `ln h(n) / n^(d-1)`.
    pub rho: f64,
}

impl BoundParams {
    pub fn validate(&self) -> Result<(), EstimateError> {
        let mut errs = Vec::new();
        if !(0.0..=1.0).contains(&self.p) {
            errs.push(format!("p = {} outside [0, 1]", self.p));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            errs.push(format!("epsilon = {} outside [0, 1)", self.epsilon));
        }
        if self.d < 2 {
            errs.push(format!("d = {} must be at least 2", self.d));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            errs.push(format!("lambda = {} must be finite and >= 0", self.lambda));
        }
        if !(self.c > 1.0 && self.c.is_finite()) {
            errs.push(format!("c = {} must be finite and > 1", self.c));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            errs.push(format!("rho = {} must be finite and >= 0", self.rho));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(EstimateError::Invalid(errs))
        }
    }
}

/// `ln(p + (1 - p) e^lambda)`, evaluated without overflowing for large `lambda`.
pub fn log_moment(p: f64, lambda: f64) -> f64 {
    if p >= 1.0 {
        return 0.0;
    }
    // lambda + ln((1 - p) + p e^-lambda)
    lambda + ((1.0 - p) + p * (-lambda).exp()).ln()
}

/// The bracket `-rho - ln c + lambda (1 - eps) - ln(p + (1 - p) e^lambda)`;
/// a positive value is a decay rate for `alpha(eps)` at speed `n^(d-1)`.
pub fn chebyshev_exponent(bp: &BoundParams) -> f64 {
    -bp.rho - bp.c.ln() + bp.lambda * (1.0 - bp.epsilon) - log_moment(bp.p, bp.lambda)
}

/// `lambda = 3 ln c / (1 - eps)` and `p_0 = (e^lambda - c) / (e^lambda - 1)`,
/// the point where `ln(p + (1 - p) e^lambda) = ln c`.
pub fn choose_lambda_p0(epsilon: f64, c: f64) -> Result<(f64, f64), EstimateError> {
    let mut errs = Vec::new();
    if !(0.0..1.0).contains(&epsilon) {
        errs.push(format!("epsilon = {epsilon} outside [0, 1)"));
    }
    if !(c > 1.0 && c.is_finite()) {
        errs.push(format!("c = {c} must be finite and > 1"));
    }
    if !errs.is_empty() {
        return Err(EstimateError::Invalid(errs));
    }
    let lambda = 3.0 * c.ln() / (1.0 - epsilon);
    // (e^l - c)/(e^l - 1) = 1 - q0 with q0 = (c - 1)/(e^l - 1). Near 1 the
    // subtraction rounds, so p0 is nudged up until 1 - p0 <= q0 holds for
    // the float value; every float p >= p0 then really satisfies the bound.
    let q0 = (c - 1.0) / lambda.exp_m1() * (1.0 - 4.0 * f64::EPSILON);
    let mut p0 = (1.0 - q0).clamp(0.0, 1.0);
    while p0 < 1.0 && 1.0 - p0 > q0 {
        p0 = p0.next_up();
    }
    Ok((lambda, p0))
}

/// The zero-flow bound `[1 - (1 - p)^((n+1)^(d-1))]^h`, carried in log space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroFlowBound {
    /// Natural logarithm of the bound (`-inf` when it is 0).
    pub ln_value: f64,
    pub log10_value: f64,
    pub value: f64,
    pub columns: u64,
}

pub fn zero_flow_bound(n: u32, h: u64, p: f64, d: usize) -> Result<ZeroFlowBound, EstimateError> {
    let mut errs = Vec::new();
    if !(0.0..=1.0).contains(&p) {
        errs.push(format!("p = {p} outside [0, 1]"));
    }
    if d < 2 {
        errs.push(format!("d = {d} must be at least 2"));
    }
    if n == 0 || h == 0 {
        errs.push("n and h must be positive".into());
    }
    if !errs.is_empty() {
        return Err(EstimateError::Invalid(errs));
    }
    let columns = (n as u64 + 1).pow(d as u32 - 1);
    // ln q with q = (1 - p)^columns, the chance that one slab is all closed
    let ln_q = columns as f64 * (-p).ln_1p();
    let q = ln_q.exp();
    let ln_value = if q >= 1.0 {
        f64::NEG_INFINITY
    } else {
        h as f64 * (-q).ln_1p()
    };
    Ok(ZeroFlowBound {
        ln_value,
        log10_value: ln_value / std::f64::consts::LN_10,
        value: ln_value.exp(),
        columns,
    })
}

/// `1 / (2 K^(d-1))`, scaled by `eta` when the capacities were truncated at `eta`.
pub fn epsilon0_renorm(k: u32, d: usize, eta: Option<f64>) -> Result<f64, EstimateError> {
    let mut errs = Vec::new();
    if k < 2 || k % 2 == 1 {
        errs.push(format!("K = {k} must be even and at least 2"));
    }
    if d < 2 {
        errs.push(format!("d = {d} must be at least 2"));
    }
    if let Some(e) = eta {
        if !(e > 0.0 && e.is_finite()) {
            errs.push(format!("eta = {e} must be positive"));
        }
    }
    if !errs.is_empty() {
        return Err(EstimateError::Invalid(errs));
    }
    Ok(eta.unwrap_or(1.0) / (2.0 * (k as f64).powi(d as i32 - 1)))
}
