use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity::CapacityField;
use crate::lattice::LatticeGraph;

/// A path `v_0, e_1, v_1, ..., e_n, v_n` of the graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenPath {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

/// Pairwise edge-disjoint open paths from `F_0` to `F_m`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathPacking {
    pub paths: Vec<OpenPath>,
}

impl PathPacking {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PackingViolation {
    #[error("path {path} is malformed")]
    Malformed { path: usize },
    #[error("path {path} does not start in F_0")]
    StartNotBottom { path: usize },
    #[error("path {path} does not end in F_m")]
    EndNotTop { path: usize },
    #[error("path {path}: edge {edge} does not join its neighbouring vertices")]
    Broken { path: usize, edge: usize },
    #[error("path {path}: edge {edge} is closed")]
    Closed { path: usize, edge: usize },
    #[error("edge {edge} is shared by paths {first} and {second}")]
    Shared {
        edge: usize,
        first: usize,
        second: usize,
    },
}

/// Checks a packing against the graph and field without reference to how it
/// was produced.
pub fn verify_packing(
    g: &LatticeGraph,
    field: &CapacityField,
    packing: &PathPacking,
) -> Result<(), PackingViolation> {
    let mut owner: Vec<Option<usize>> = vec![None; g.num_edges()];
    for (i, path) in packing.paths.iter().enumerate() {
        if path.edges.is_empty() || path.vertices.len() != path.edges.len() + 1 {
            return Err(PackingViolation::Malformed { path: i });
        }
        if path.vertices.iter().any(|&v| v >= g.num_vertices())
            || path.edges.iter().any(|&e| e >= g.num_edges())
        {
            return Err(PackingViolation::Malformed { path: i });
        }
        if !g.is_bottom(path.vertices[0]) {
            return Err(PackingViolation::StartNotBottom { path: i });
        }
        if !g.is_top(*path.vertices.last().unwrap()) {
            return Err(PackingViolation::EndNotTop { path: i });
        }
        for (j, &e) in path.edges.iter().enumerate() {
            let edge = g.edge(e);
            let (a, b) = (path.vertices[j], path.vertices[j + 1]);
            if !((edge.lo == a && edge.hi == b) || (edge.lo == b && edge.hi == a)) {
                return Err(PackingViolation::Broken { path: i, edge: e });
            }
            if field.get(e) != 1.0 {
                return Err(PackingViolation::Closed { path: i, edge: e });
            }
            if let Some(first) = owner[e] {
                return Err(PackingViolation::Shared {
                    edge: e,
                    first,
                    second: i,
                });
            }
            owner[e] = Some(i);
        }
    }
    Ok(())
}

/// Splits an integral `F_0 -> F_m` flow (signed per edge, positive meaning
/// `lo -> hi`) into paths, cancelling any cycle met on the way.
pub(crate) fn decompose(g: &LatticeGraph, edge_flow: &[i64]) -> PathPacking {
    let mut remaining = edge_flow.to_vec();
    let mut net_out = vec![0i64; g.num_vertices()];
    for (e, edge) in g.edges().iter().enumerate() {
        net_out[edge.lo] += remaining[e];
        net_out[edge.hi] -= remaining[e];
    }
    let mut on_walk = vec![usize::MAX; g.num_vertices()];
    let mut paths = Vec::new();
    for &start in g.bottom() {
        while net_out[start] > 0 {
            net_out[start] -= 1;
            let mut vertices = vec![start];
            let mut edges: Vec<usize> = Vec::new();
            on_walk[start] = 0;
            let mut v = start;
            loop {
                if g.is_top(v) && net_out[v] < 0 {
                    net_out[v] += 1;
                    break;
                }
                let (e, w) = g
                    .incident(v)
                    .find(|&(e, w)| {
                        let f = remaining[e];
                        (f > 0 && g.edge(e).lo == v) || (f < 0 && g.edge(e).lo == w)
                    })
                    .expect("flow conservation violated during decomposition");
                remaining[e] -= remaining[e].signum();
                if on_walk[w] != usize::MAX {
                    let keep = on_walk[w];
                    for &u in &vertices[keep + 1..] {
                        on_walk[u] = usize::MAX;
                    }
                    vertices.truncate(keep + 1);
                    edges.truncate(keep);
                } else {
                    on_walk[w] = vertices.len();
                    vertices.push(w);
                    edges.push(e);
                }
                v = w;
            }
            for &u in &vertices {
                on_walk[u] = usize::MAX;
            }
            paths.push(OpenPath { vertices, edges });
        }
    }
    PathPacking { paths }
}
