//! Capacity laws `F`, reproducible i.i.d. capacity fields and the reduction of
//! a general field to a 0/1 field by thresholding at `eta`.

mod seed;

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use seed::{EdgeDraws, EdgeStreams, SeedSpec};

use crate::lattice::LatticeGraph;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("F(0) = {f0} is not below 1 - p_c = {threshold}")]
    HypothesisFailed { f0: f64, threshold: f64 },
    #[error("no eta on the halving grid from {start} satisfies 1 - F(eta) > {p_c}")]
    EtaSearchExhausted { start: f64, p_c: f64 },
    #[error("capacity field has {field} values but the graph has {edges} edges")]
    SizeMismatch { field: usize, edges: usize },
}

/// Critical bond percolation parameter used when none is configured:
/// 1/2 in two dimensions (exact), 0.2488 in three (numerical estimate).
pub fn default_pc(d: usize) -> Option<f64> {
    match d {
        2 => Some(0.5),
        3 => Some(0.2488),
        _ => None,
    }
}

/// Continuous part of a mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TailLaw {
    Exponential { rate: f64 },
    Uniform { a: f64, b: f64 },
}

impl TailLaw {
    fn cdf(&self, x: f64) -> f64 {
        match *self {
            TailLaw::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            TailLaw::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
        }
    }

    fn sample(&self, u: f64) -> f64 {
        match *self {
            TailLaw::Exponential { rate } => -(-u).ln_1p() / rate,
            TailLaw::Uniform { a, b } => a + (b - a) * u,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub value: f64,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tail {
    pub weight: f64,
    pub law: TailLaw,
}

/// The common law `F` of the capacities.
///
/// JSON form: `{"type":"bernoulli","p":0.7}`, `{"type":"constant","value":1}`,
/// `{"type":"mixture","atoms":[{"value":0,"prob":0.3}],
/// "tail":{"weight":0.7,"law":{"type":"uniform","a":1,"b":2}}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CapacityDistribution {
    Bernoulli {
        p: f64,
    },
    Constant {
        value: f64,
    },
    Mixture {
        atoms: Vec<Atom>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail: Option<Tail>,
    },
}

const PROB_TOLERANCE: f64 = 1e-9;

impl CapacityDistribution {
    pub fn validate(&self) -> Result<(), CapacityError> {
        let bad = |msg: String| Err(CapacityError::InvalidDistribution(msg));
        match self {
            CapacityDistribution::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return bad(format!("bernoulli parameter {p} outside [0, 1]"));
                }
            }
            CapacityDistribution::Constant { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return bad(format!("constant capacity {value} must be finite and >= 0"));
                }
            }
            CapacityDistribution::Mixture { atoms, tail } => {
                let mut total = 0.0;
                for (i, a) in atoms.iter().enumerate() {
                    if !(a.value.is_finite() && a.value >= 0.0) {
                        return bad(format!("atom {i} has value {} < 0", a.value));
                    }
                    if !(0.0..=1.0).contains(&a.prob) {
                        return bad(format!(
                            "atom {i} has probability {} outside [0, 1]",
                            a.prob
                        ));
                    }
                    total += a.prob;
                }
                if let Some(t) = tail {
                    if !(0.0..=1.0).contains(&t.weight) {
                        return bad(format!("tail weight {} outside [0, 1]", t.weight));
                    }
                    total += t.weight;
                    match t.law {
                        TailLaw::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                            return bad(format!("exponential rate {rate} must be positive"));
                        }
                        TailLaw::Uniform { a, b } if !(a >= 0.0 && b > a && b.is_finite()) => {
                            return bad(format!("uniform tail needs 0 <= a < b, got [{a}, {b}]"));
                        }
                        _ => {}
                    }
                }
                if (total - 1.0).abs() > PROB_TOLERANCE {
                    return bad(format!("probabilities sum to {total}, not 1"));
                }
            }
        }
        Ok(())
    }

    /// Only point masses: capacities can then be handled exactly.
    pub fn is_atomic(&self) -> bool {
        match self {
            CapacityDistribution::Mixture { tail: Some(t), .. } => t.weight == 0.0,
            _ => true,
        }
    }

    /// Right-continuous distribution function; 0 below 0.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            CapacityDistribution::Bernoulli { p } => {
                if x < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            CapacityDistribution::Constant { value } => {
                if x < *value {
                    0.0
                } else {
                    1.0
                }
            }
            CapacityDistribution::Mixture { atoms, tail } => {
                let atomic: f64 = atoms.iter().filter(|a| a.value <= x).map(|a| a.prob).sum();
                let cont = tail.as_ref().map_or(0.0, |t| t.weight * t.law.cdf(x));
                (atomic + cont).min(1.0)
            }
        }
    }

    /// Smallest positive atom carrying mass, if any.
    pub fn smallest_positive_atom(&self) -> Option<f64> {
        match self {
            CapacityDistribution::Bernoulli { p } => (*p > 0.0).then_some(1.0),
            CapacityDistribution::Constant { value } => (*value > 0.0).then_some(*value),
            CapacityDistribution::Mixture { atoms, .. } => atoms
                .iter()
                .filter(|a| a.value > 0.0 && a.prob > 0.0)
                .map(|a| a.value)
                .reduce(f64::min),
        }
    }

    /// One capacity from the draws of a single edge.
    pub fn sample(&self, draws: &mut EdgeDraws) -> f64 {
        match self {
            CapacityDistribution::Bernoulli { p } => {
                if draws.uniform() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            CapacityDistribution::Constant { value } => *value,
            CapacityDistribution::Mixture { atoms, tail } => {
                let u = draws.uniform();
                let mut acc = 0.0;
                for a in atoms {
                    acc += a.prob;
                    if u < acc {
                        return a.value;
                    }
                }
                match tail {
                    Some(t) if t.weight > 0.0 => t.law.sample(draws.uniform()),
                    // rounding left u above the atom total
                    _ => atoms
                        .iter()
                        .rev()
                        .find(|a| a.prob > 0.0)
                        .map_or(0.0, |a| a.value),
                }
            }
        }
    }
}

/// Where a field came from, enough to regenerate it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub distribution: CapacityDistribution,
    pub seed: SeedSpec,
    /// Set when the field is the 0/1 thresholding of the sampled one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated_at: Option<f64>,
}

/// One nonnegative capacity per edge of a graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityField {
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

impl CapacityField {
    /// A hand-made field. Panics on negative or non-finite capacities.
    pub fn from_values(values: Vec<f64>) -> Self {
        assert!(
            values.iter().all(|v| v.is_finite() && *v >= 0.0),
            "capacities must be finite and nonnegative"
        );
        Self {
            values,
            provenance: None,
        }
    }

    pub fn constant(num_edges: usize, value: f64) -> Self {
        Self::from_values(vec![value; num_edges])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, e: usize) -> f64 {
        self.values[e]
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// All values are 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn check_graph(&self, g: &LatticeGraph) -> Result<(), CapacityError> {
        if self.values.len() != g.num_edges() {
            return Err(CapacityError::SizeMismatch {
                field: self.values.len(),
                edges: g.num_edges(),
            });
        }
        Ok(())
    }

    /// The field seen on the sub-box `to` of `from`, matching edges by their
    /// position in `Z^d`. `None` if some edge of `to` is not in `from`.
    pub fn restrict(&self, from: &LatticeGraph, to: &LatticeGraph) -> Option<CapacityField> {
        let values = (0..to.num_edges())
            .map(|e| from.edge_index(&to.lattice_edge(e)).map(|i| self.values[i]))
            .collect::<Option<Vec<f64>>>()?;
        Some(Self {
            values,
            provenance: None,
        })
    }

    /// `edge,capacity` rows, one per edge in index order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "edge,capacity")?;
        for (e, v) in self.values.iter().enumerate() {
            writeln!(out, "{e},{v}")?;
        }
        Ok(())
    }
}

/// Samples the i.i.d. field on `g`. Each value depends only on the
/// distribution, `seed` and the edge index.
pub fn sample_capacities(
    g: &LatticeGraph,
    dist: &CapacityDistribution,
    seed: SeedSpec,
) -> CapacityField {
    let values = sample_values(g.num_edges(), dist, seed);
    CapacityField {
        values,
        provenance: Some(Provenance {
            distribution: dist.clone(),
            seed,
            truncated_at: None,
        }),
    }
}

pub(crate) fn sample_values(
    num_edges: usize,
    dist: &CapacityDistribution,
    seed: SeedSpec,
) -> Vec<f64> {
    let streams = EdgeStreams::new(seed);
    (0..num_edges)
        .into_par_iter()
        .with_min_len(4096)
        .map(|e| dist.sample(&mut streams.edge(e)))
        .collect()
}

/// Distribution function `F(x)`.
pub fn cdf(dist: &CapacityDistribution, x: f64) -> f64 {
    dist.cdf(x)
}

/// Largest threshold `eta` on the grid `x0 * 2^-j` with `1 - F(eta) > p_c`,
/// where `x0` is the smallest positive atom (or 1 without one).
pub fn choose_eta(dist: &CapacityDistribution, p_c: f64) -> Result<f64, CapacityError> {
    let f0 = dist.cdf(0.0);
    if f0 >= 1.0 - p_c {
        return Err(CapacityError::HypothesisFailed {
            f0,
            threshold: 1.0 - p_c,
        });
    }
    let start = dist.smallest_positive_atom().unwrap_or(1.0);
    let mut eta = start;
    for _ in 0..=60 {
        if 1.0 - dist.cdf(eta) > p_c {
            return Ok(eta);
        }
        eta /= 2.0;
    }
    Err(CapacityError::EtaSearchExhausted { start, p_c })
}

/// `t'(e) = 1` if `t(e) > eta`, else 0.
pub fn truncate(field: &CapacityField, eta: f64) -> CapacityField {
    CapacityField {
        values: field
            .values
            .iter()
            .map(|&t| if t > eta { 1.0 } else { 0.0 })
            .collect(),
        provenance: field.provenance.as_ref().map(|p| Provenance {
            truncated_at: Some(eta),
            ..p.clone()
        }),
    }
}
