//! Monte Carlo estimation of `alpha(eps) = P[phi <= eps n^(d-1)]` on square
//! cylinders and of the rate `-ln alpha / n^(d-1)`, plus the closed-form
//! bounds and animal counts that go with them.

pub mod animals;
pub mod bounds;

use std::io::{self, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity::{sample_capacities, CapacityDistribution, SeedSpec};
use crate::flow::{flow_value, FlowError};
use crate::lattice::{build_cylinder, CylinderSpec, LatticeError};
use crate::stats::{wilson, wilson_upper};

pub use animals::{count_diamond_sets, count_vertex_animals, AnimalCounts};
pub use bounds::{
    chebyshev_exponent, choose_lambda_p0, epsilon0_renorm, zero_flow_bound, BoundParams,
    ZeroFlowBound,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("invalid parameters: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("size {size} above the enumeration cap {cap}")]
    SizeCap { size: usize, cap: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Largest height a height function may produce.
pub const MAX_HEIGHT: u64 = 1 << 20;

/// `h(n)`, rounded to the nearest integer and at least 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum HeightFn {
    Constant {
        h: u64,
    },
    /// `c n`.
    Linear {
        c: f64,
    },
    /// `n^a`.
    Power {
        a: f64,
    },
    /// `base^(r n^(d-1))`, the regime where the flow collapses.
    Exponential {
        base: f64,
        r: f64,
    },
}

impl HeightFn {
    pub fn eval(&self, n: u32, d: usize) -> Result<u64, EstimateError> {
        let n_f = n as f64;
        let raw = match *self {
            HeightFn::Constant { h } => h as f64,
            HeightFn::Linear { c } => c * n_f,
            HeightFn::Power { a } => n_f.powf(a),
            HeightFn::Exponential { base, r } => base.powf(r * n_f.powi(d as i32 - 1)),
        };
        if !raw.is_finite() || raw.round() > MAX_HEIGHT as f64 {
            return Err(EstimateError::Invalid(vec![format!(
                "height {raw} at n = {n} is above the limit {MAX_HEIGHT}"
            )]));
        }
        let h = raw.round() as u64;
        if h < 1 {
            return Err(EstimateError::Invalid(vec![format!(
                "height {raw} at n = {n} is below 1"
            )]));
        }
        Ok(h)
    }
}

/// One Monte Carlo experiment over a list of side lengths and thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub d: usize,
    pub ns: Vec<u32>,
    pub height: HeightFn,
    pub distribution: CapacityDistribution,
    pub epsilons: Vec<f64>,
    pub replicates: u64,
    pub seed: u64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

fn default_confidence() -> f64 {
    0.99
}

impl ExperimentSpec {
    /// Every violated constraint, not only the first.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.d < 2 {
            errs.push(format!("d = {} must be at least 2", self.d));
        }
        if self.ns.is_empty() {
            errs.push("ns must list at least one side length".into());
        }
        if self.ns.contains(&0) {
            errs.push("side lengths must be positive".into());
        }
        if self.epsilons.is_empty() {
            errs.push("epsilons must list at least one value".into());
        }
        for e in &self.epsilons {
            if !(*e >= 0.0 && e.is_finite()) {
                errs.push(format!("epsilon = {e} must be finite and >= 0"));
            }
        }
        if self.replicates == 0 {
            errs.push("replicates must be at least 1".into());
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            errs.push(format!("confidence = {} outside (0, 1)", self.confidence));
        }
        if let Err(e) = self.distribution.validate() {
            errs.push(e.to_string());
        }
        if self.d >= 2 {
            for &n in self.ns.iter().filter(|&&n| n > 0) {
                if let Err(EstimateError::Invalid(v)) = self.height.eval(n, self.d) {
                    errs.extend(v);
                }
            }
        }
        errs
    }

    pub fn validate(&self) -> Result<(), EstimateError> {
        let errs = self.violations();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(EstimateError::Invalid(errs))
        }
    }
}

/// `alpha(eps)` at one side length and one threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub n: u32,
    pub h: u64,
    pub epsilon: f64,
    /// `eps n^(d-1)`.
    pub threshold: f64,
    /// Replicates with `phi <= threshold`.
    pub hits: u64,
    pub replicates: u64,
    pub alpha: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `-ln alpha / n^(d-1)`; absent when no replicate hit.
    pub rate: Option<f64>,
    /// `-ln(upper bound on alpha) / n^(d-1)` from the one-sided Wilson bound
    /// at the experiment's confidence; the certified lower bound on the rate.
    pub rate_lower: f64,
    /// `-ln(ci_lo) / n^(d-1)`; absent when `ci_lo = 0`.
    pub rate_upper: Option<f64>,
    pub censored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub d: usize,
    pub confidence: f64,
    pub rows: Vec<AlphaRow>,
    /// Not serialized, so that reports stay reproducible.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

const CSV_HEADER: &str =
    "n,h,epsilon,threshold,hits,replicates,alpha,ci_lo,ci_hi,rate,rate_lower,rate_upper,censored";

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

impl EstimationReport {
    /// One row per `(n, epsilon)`; empty fields for undefined rates.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.n,
                r.h,
                r.epsilon,
                r.threshold,
                r.hits,
                r.replicates,
                r.alpha,
                r.ci_lo,
                r.ci_hi,
                opt(r.rate),
                r.rate_lower,
                opt(r.rate_upper),
                r.censored
            )?;
        }
        Ok(())
    }

    pub fn rows_for(&self, epsilon: f64) -> impl Iterator<Item = &AlphaRow> {
        self.rows.iter().filter(move |r| r.epsilon == epsilon)
    }
}

/// Flow values of every replicate at side `n`, in replicate order.
pub fn sample_flows(spec: &ExperimentSpec, n: u32) -> Result<Vec<f64>, EstimateError> {
    let h = spec.height.eval(n, spec.d)?;
    let cyl = CylinderSpec::square(spec.d, n, h as u32)?;
    let g = build_cylinder(&cyl)?;
    let seed = SeedSpec::derive(spec.seed, n as u64);
    (0..spec.replicates)
        .into_par_iter()
        .map(|r| {
            let field = sample_capacities(&g, &spec.distribution, SeedSpec::new(seed, r));
            flow_value(&g, &field).map_err(EstimateError::from)
        })
        .collect()
}

fn row(n: u32, h: u64, d: usize, epsilon: f64, flows: &[f64], confidence: f64) -> AlphaRow {
    let area = (n as f64).powi(d as i32 - 1);
    let threshold = epsilon * area;
    let hits = flows.iter().filter(|&&phi| phi <= threshold).count() as u64;
    let trials = flows.len() as u64;
    let ci = wilson(hits, trials, confidence);
    let alpha = hits as f64 / trials as f64;
    let rate_of = |a: f64| -a.ln() / area;
    AlphaRow {
        n,
        h,
        epsilon,
        threshold,
        hits,
        replicates: trials,
        alpha,
        ci_lo: ci.lo,
        ci_hi: ci.hi,
        rate: (hits > 0).then(|| rate_of(alpha)),
        rate_lower: rate_of(wilson_upper(hits, trials, confidence)),
        rate_upper: (ci.lo > 0.0).then(|| rate_of(ci.lo)),
        censored: hits == 0,
    }
}

/// Estimates `alpha(eps)` for every side length and threshold of the spec.
/// All thresholds at one side length share the same sampled fields.
pub fn estimate_alpha(spec: &ExperimentSpec) -> Result<EstimationReport, EstimateError> {
    spec.validate()?;
    let start = Instant::now();
    let mut rows = Vec::new();
    for &n in &spec.ns {
        let h = spec.height.eval(n, spec.d)?;
        let flows = sample_flows(spec, n)?;
        for &eps in &spec.epsilons {
            rows.push(row(n, h, spec.d, eps, &flows, spec.confidence));
        }
    }
    Ok(EstimationReport {
        d: spec.d,
        confidence: spec.confidence,
        rows,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

/// Rates across an increasing list of side lengths, checked against a floor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub report: EstimationReport,
    pub floor: f64,
    /// Per epsilon: whether the rate (or its censored lower bound) stays at
    /// or above the floor at every side length.
    pub above_floor: Vec<(f64, bool)>,
}

impl SweepReport {
    pub fn all_above_floor(&self) -> bool {
        self.above_floor.iter().all(|&(_, ok)| ok)
    }
}

/// The rate used against the floor: the point estimate, or the certified
/// lower bound when no replicate hit.
pub fn effective_rate(row: &AlphaRow) -> f64 {
    row.rate.unwrap_or(row.rate_lower)
}

pub fn rate_sweep(spec: &ExperimentSpec, floor: f64) -> Result<SweepReport, EstimateError> {
    if spec.ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EstimateError::Invalid(vec![
            "ns must be strictly increasing".into(),
        ]));
    }
    let report = estimate_alpha(spec)?;
    let above_floor = spec
        .epsilons
        .iter()
        .map(|&eps| {
            (
                eps,
                report.rows_for(eps).all(|r| effective_rate(r) >= floor),
            )
        })
        .collect();
    Ok(SweepReport {
        report,
        floor,
        above_floor,
    })
}
