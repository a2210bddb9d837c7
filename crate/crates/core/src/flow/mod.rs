//! Maximal flow from the bottom face to the top face of a cylinder, its dual
//! minimal cut, disjoint open paths for 0/1 capacities and stream checking.
//!
//! The lattice is turned into a network with a super-source wired to every
//! vertex of `F_0` and a super-sink wired from every vertex of `F_m`, both by
//! unbounded arcs; each lattice edge becomes an undirected pair of arcs of
//! capacity `t(e)`. Capacities are solved exactly as dyadic rationals
//! whenever they fit in 128-bit integers over a common power of two, and in
//! floating point otherwise.

mod exact;
pub mod network;
pub mod oracle;
mod paths;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use exact::{Dyadic, ScaledCapacities};
pub use paths::{verify_packing, OpenPath, PackingViolation, PathPacking};

use crate::capacity::{CapacityError, CapacityField};
use crate::lattice::{EdgeSet, LatticeGraph};
use network::{FlowNum, Network};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error("edge {edge} has capacity {value}; a 0/1 field is required")]
    NotBinary { edge: usize, value: f64 },
    #[error("capacities cannot be represented exactly as 128-bit dyadic rationals")]
    ExactUnavailable,
}

/// Which arithmetic the solver runs on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    /// Exact when the capacities allow it, floating point otherwise.
    #[default]
    Auto,
    Exact,
    Float,
}

/// Relative tolerance of the floating-point route: residuals below
/// `1e-12 * max(1, max capacity)` count as saturated.
const FLOAT_RESIDUAL: f64 = 1e-12;
/// Largest duality gap accepted from the floating-point route, relative to `max(1, phi)`.
pub const FLOAT_DUALITY_GAP: f64 = 1e-6;

/// Direction of the fluid on an edge, relative to its lower endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// From `edge.lo` to `edge.hi`.
    Up,
    Down,
}

/// A possible stream `(g, o)`: an amount and a direction per edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stream {
    pub amount: Vec<f64>,
    pub orientation: Vec<Orientation>,
}

impl Stream {
    pub fn zero(num_edges: usize) -> Self {
        Self {
            amount: vec![0.0; num_edges],
            orientation: vec![Orientation::Up; num_edges],
        }
    }

    /// From signed flows, positive meaning `lo -> hi`.
    pub fn from_signed(flows: &[f64]) -> Self {
        Self {
            amount: flows.iter().map(|f| f.abs()).collect(),
            orientation: flows
                .iter()
                .map(|&f| {
                    if f < 0.0 {
                        Orientation::Down
                    } else {
                        Orientation::Up
                    }
                })
                .collect(),
        }
    }

    pub fn signed(&self, e: usize) -> f64 {
        match self.orientation[e] {
            Orientation::Up => self.amount[e],
            Orientation::Down => -self.amount[e],
        }
    }
}

/// Maximal flow, an attaining stream and a minimal cut of the same value.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowResult {
    pub value: f64,
    /// Present when the exact route was used.
    pub exact_value: Option<Dyadic>,
    pub stream: Stream,
    pub cut: EdgeSet,
    /// `V(cut)`.
    pub cut_value: f64,
    pub exact_cut_value: Option<Dyadic>,
}

/// JSON shape of a [`FlowResult`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowReport {
    pub value: f64,
    pub exact: bool,
    pub cut_value: f64,
    pub cut: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flows: Option<Vec<f64>>,
}

impl FlowResult {
    pub fn report(&self, with_flows: bool) -> FlowReport {
        FlowReport {
            value: self.value,
            exact: self.exact_value.is_some(),
            cut_value: self.cut_value,
            cut: self.cut.iter().collect(),
            flows: with_flows.then(|| {
                (0..self.stream.amount.len())
                    .map(|e| self.stream.signed(e))
                    .collect()
            }),
        }
    }
}

struct Solved<T> {
    value: T,
    edge_flow: Vec<T>,
    source_side: Vec<bool>,
}

fn solve<T: FlowNum>(g: &LatticeGraph, caps: &[T], tolerance: T, with_cut: bool) -> Solved<T> {
    let n = g.num_vertices();
    let (source, sink) = (n, n + 1);
    let mut net = Network::with_tolerance(n + 2, tolerance);
    let arcs: Vec<usize> = g
        .edges()
        .iter()
        .zip(caps)
        .map(|(e, &c)| net.add_edge(e.lo, e.hi, c))
        .collect();
    for &v in g.bottom() {
        net.add_arc(source, v, T::infinity());
    }
    for &v in g.top() {
        net.add_arc(v, sink, T::infinity());
    }
    let value = net.max_flow(source, sink);
    let edge_flow = arcs.iter().map(|&a| net.flow(a)).collect();
    let source_side = if with_cut {
        let mut side = net.residual_reachable(source);
        side.truncate(n);
        side
    } else {
        Vec::new()
    };
    Solved {
        value,
        edge_flow,
        source_side,
    }
}

fn float_tolerance(values: &[f64]) -> f64 {
    FLOAT_RESIDUAL * values.iter().copied().fold(1.0, f64::max)
}

/// Edges leaving the source side, then greedily pruned in index order to an
/// inclusion-minimal separating set.
fn canonical_cut(g: &LatticeGraph, source_side: &[bool]) -> EdgeSet {
    let mut mask: Vec<bool> = g
        .edges()
        .iter()
        .map(|e| source_side[e.lo] != source_side[e.hi])
        .collect();
    for e in 0..mask.len() {
        if mask[e] {
            mask[e] = false;
            if !g.separated_by_mask(&mask) {
                mask[e] = true;
            }
        }
    }
    mask.iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(e, _)| e)
        .collect()
}

/// Maximal flow `phi_B` with automatic choice of arithmetic.
pub fn max_flow(g: &LatticeGraph, field: &CapacityField) -> Result<FlowResult, FlowError> {
    max_flow_with(g, field, Arithmetic::Auto)
}

pub fn max_flow_with(
    g: &LatticeGraph,
    field: &CapacityField,
    arithmetic: Arithmetic,
) -> Result<FlowResult, FlowError> {
    field.check_graph(g)?;
    let scaled = match arithmetic {
        Arithmetic::Float => None,
        Arithmetic::Auto => ScaledCapacities::from_values(field.values()),
        Arithmetic::Exact => {
            Some(ScaledCapacities::from_values(field.values()).ok_or(FlowError::ExactUnavailable)?)
        }
    };
    if let Some(sc) = scaled {
        let solved = solve(g, &sc.scaled, 0i128, true);
        let cut = canonical_cut(g, &solved.source_side);
        let cut_numer: i128 = cut.iter().map(|e| sc.scaled[e]).sum();
        let exact_value = sc.dyadic(solved.value);
        let flows: Vec<f64> = solved
            .edge_flow
            .iter()
            .map(|&f| sc.dyadic(f).to_f64())
            .collect();
        assert_eq!(solved.value, cut_numer, "exact max-flow/min-cut mismatch");
        return Ok(FlowResult {
            value: exact_value.to_f64(),
            exact_value: Some(exact_value),
            stream: Stream::from_signed(&flows),
            cut,
            cut_value: sc.dyadic(cut_numer).to_f64(),
            exact_cut_value: Some(sc.dyadic(cut_numer)),
        });
    }
    let values = field.values();
    let solved = solve(g, values, float_tolerance(values), true);
    let cut = canonical_cut(g, &solved.source_side);
    let cut_value = cut.value(values);
    let gap = (cut_value - solved.value).abs();
    assert!(
        gap <= FLOAT_DUALITY_GAP * solved.value.max(1.0),
        "duality gap {gap} between flow {} and cut {cut_value}",
        solved.value
    );
    Ok(FlowResult {
        value: solved.value,
        exact_value: None,
        stream: Stream::from_signed(&solved.edge_flow),
        cut,
        cut_value,
        exact_cut_value: None,
    })
}

/// Only the value `phi_B`; skips the cut and stream bookkeeping. Used by the
/// Monte Carlo loops.
pub fn flow_value(g: &LatticeGraph, field: &CapacityField) -> Result<f64, FlowError> {
    field.check_graph(g)?;
    if let Some(sc) = ScaledCapacities::from_values(field.values()) {
        let solved = solve(g, &sc.scaled, 0i128, false);
        return Ok(sc.dyadic(solved.value).to_f64());
    }
    let values = field.values();
    Ok(solve(g, values, float_tolerance(values), false).value)
}

/// The canonical minimal cut; its value equals the maximal flow.
pub fn min_cut(g: &LatticeGraph, field: &CapacityField) -> Result<EdgeSet, FlowError> {
    Ok(max_flow(g, field)?.cut)
}

fn binary_capacities(field: &CapacityField) -> Result<Vec<i64>, FlowError> {
    field
        .values()
        .iter()
        .enumerate()
        .map(|(edge, &value)| match value {
            v if v == 0.0 => Ok(0),
            v if v == 1.0 => Ok(1),
            _ => Err(FlowError::NotBinary { edge, value }),
        })
        .collect()
}

/// Maximal family of edge-disjoint open paths from `F_0` to `F_m` for a 0/1
/// field, obtained by decomposing an integral maximal flow. Its size is the
/// maximal flow.
pub fn count_disjoint_open_paths(
    g: &LatticeGraph,
    field: &CapacityField,
) -> Result<PathPacking, FlowError> {
    field.check_graph(g)?;
    let caps = binary_capacities(field)?;
    let solved = solve(g, &caps, 0i64, false);
    let packing = paths::decompose(g, &solved.edge_flow);
    debug_assert_eq!(packing.len() as i64, solved.value);
    Ok(packing)
}

/// A constraint broken by a stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StreamViolation {
    Size {
        stream: usize,
        edges: usize,
    },
    Negative {
        edge: usize,
        amount: f64,
    },
    Capacity {
        edge: usize,
        amount: f64,
        capacity: f64,
    },
    /// Net outflow `imbalance` at a vertex outside `F_0` and `F_m`.
    Conservation {
        vertex: usize,
        imbalance: f64,
    },
}

/// Checks `0 <= g(e) <= t(e)` on every edge and conservation at every vertex
/// of `B \ (F_0 u F_m)`, then returns the crossing flow: the signed amount on
/// edges entering `F_m` from outside it.
///
/// Conservation is deliberately not imposed on `F_0`: taken literally on
/// `B \ F_m` it would force every stream to carry nothing.
pub fn validate_stream(
    g: &LatticeGraph,
    field: &CapacityField,
    stream: &Stream,
) -> Result<f64, StreamViolation> {
    validate_stream_with_tolerance(g, field, stream, float_tolerance(field.values()) * 1e3)
}

pub fn validate_stream_with_tolerance(
    g: &LatticeGraph,
    field: &CapacityField,
    stream: &Stream,
    tolerance: f64,
) -> Result<f64, StreamViolation> {
    let m = g.num_edges();
    if stream.amount.len() != m || stream.orientation.len() != m || field.len() != m {
        return Err(StreamViolation::Size {
            stream: stream.amount.len(),
            edges: m,
        });
    }
    for e in 0..m {
        let amount = stream.amount[e];
        if amount < 0.0 || amount.is_nan() {
            return Err(StreamViolation::Negative { edge: e, amount });
        }
        if amount > field.get(e) + tolerance {
            return Err(StreamViolation::Capacity {
                edge: e,
                amount,
                capacity: field.get(e),
            });
        }
    }
    let mut net_out = vec![0.0; g.num_vertices()];
    for (e, edge) in g.edges().iter().enumerate() {
        let f = stream.signed(e);
        net_out[edge.lo] += f;
        net_out[edge.hi] -= f;
    }
    for (v, &imbalance) in net_out.iter().enumerate() {
        if !g.is_bottom(v) && !g.is_top(v) && imbalance.abs() > tolerance * g.d() as f64 * 2.0 {
            return Err(StreamViolation::Conservation {
                vertex: v,
                imbalance,
            });
        }
    }
    let mut crossing = 0.0;
    for (e, edge) in g.edges().iter().enumerate() {
        let (lo_top, hi_top) = (g.is_top(edge.lo), g.is_top(edge.hi));
        if hi_top && !lo_top {
            crossing += stream.signed(e);
        } else if lo_top && !hi_top {
            crossing -= stream.signed(e);
        }
    }
    Ok(crossing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_cylinder, is_cut, CylinderSpec};

    fn cyl(k: u32, m: u32) -> LatticeGraph {
        build_cylinder(&CylinderSpec::new(2, vec![k], m).unwrap()).unwrap()
    }

    #[test]
    fn unit_capacities_give_column_count() {
        let g = cyl(2, 3);
        let field = CapacityField::constant(g.num_edges(), 1.0);
        let r = max_flow(&g, &field).unwrap();
        assert_eq!(r.value, 3.0);
        assert_eq!(r.cut.len(), 3);
        assert_eq!(r.cut_value, 3.0);
        assert!(is_cut(&r.cut, &g));
        assert_eq!(validate_stream(&g, &field, &r.stream), Ok(3.0));
    }

    #[test]
    fn zero_capacities_give_zero_flow_and_a_zero_cut() {
        let g = cyl(2, 3);
        let field = CapacityField::constant(g.num_edges(), 0.0);
        let r = max_flow(&g, &field).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.cut_value, 0.0);
        assert!(is_cut(&r.cut, &g));
    }

    #[test]
    fn square_with_one_closed_vertical() {
        let g = cyl(1, 1);
        // edges: 0 = <(0,0),(1,0)>, 1 = <(0,0),(0,1)>, 2 = <(0,1),(1,1)>, 3 = <(1,0),(1,1)>
        assert_eq!(g.edge(1).axis, 1);
        assert_eq!(g.edge(3).axis, 1);
        let field = CapacityField::from_values(vec![1.0, 0.0, 1.0, 1.0]);
        let r = max_flow(&g, &field).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(oracle::brute_force_min_cut(&g, &field).unwrap().value, 1.0);
    }

    #[test]
    fn float_route_agrees_with_exact_route() {
        let g = cyl(3, 3);
        let vals: Vec<f64> = (0..g.num_edges())
            .map(|e| ((e * 37) % 11) as f64 / 7.0)
            .collect();
        let field = CapacityField::from_values(vals);
        let exact = max_flow_with(&g, &field, Arithmetic::Exact).unwrap();
        let float = max_flow_with(&g, &field, Arithmetic::Float).unwrap();
        assert!(exact.exact_value.is_some() && float.exact_value.is_none());
        assert!((exact.value - float.value).abs() <= 1e-9 * exact.value.max(1.0));
        assert_eq!(flow_value(&g, &field).unwrap(), exact.value);
        assert!(validate_stream(&g, &field, &float.stream).is_ok());
    }

    #[test]
    fn stream_violations_are_reported() {
        let g = cyl(1, 1);
        let field = CapacityField::constant(4, 1.0);
        assert_eq!(validate_stream(&g, &field, &Stream::zero(4)), Ok(0.0));

        let mut up_column = Stream::zero(4);
        up_column.amount[1] = 1.0;
        assert_eq!(validate_stream(&g, &field, &up_column), Ok(1.0));

        let mut over = Stream::zero(4);
        over.amount[1] = 2.0;
        assert!(matches!(
            validate_stream(&g, &field, &over),
            Err(StreamViolation::Capacity { edge: 1, .. })
        ));

        let g = cyl(1, 2);
        let field = CapacityField::constant(g.num_edges(), 1.0);
        let mut leaky = Stream::zero(g.num_edges());
        leaky.amount[1] = 1.0; // (0,0) -> (0,1), nothing leaves (0,1)
        assert!(matches!(
            validate_stream(&g, &field, &leaky),
            Err(StreamViolation::Conservation { vertex: 1, .. })
        ));
    }

    #[test]
    fn path_packing_needs_binary_field() {
        let g = cyl(1, 1);
        let field = CapacityField::from_values(vec![0.5, 1.0, 1.0, 1.0]);
        assert_eq!(
            count_disjoint_open_paths(&g, &field),
            Err(FlowError::NotBinary {
                edge: 0,
                value: 0.5
            })
        );
    }

    #[test]
    fn columns_pack_into_disjoint_paths() {
        let g = cyl(2, 3);
        let ones = CapacityField::constant(g.num_edges(), 1.0);
        let packing = count_disjoint_open_paths(&g, &ones).unwrap();
        assert_eq!(packing.len(), 3);
        verify_packing(&g, &ones, &packing).unwrap();
        let zeros = CapacityField::constant(g.num_edges(), 0.0);
        assert_eq!(count_disjoint_open_paths(&g, &zeros).unwrap().len(), 0);
    }

    #[test]
    fn report_json() {
        let g = cyl(1, 1);
        let r = max_flow(&g, &CapacityField::constant(4, 1.0)).unwrap();
        let json = serde_json::to_value(r.report(true)).unwrap();
        assert_eq!(json["value"], 2.0);
        assert_eq!(json["cut"], serde_json::json!([1, 3]));
        assert_eq!(json["flows"].as_array().unwrap().len(), 4);
    }
}
