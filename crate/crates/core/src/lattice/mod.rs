//! The cylinder `B(k, m) = [0,k_1] x ... x [0,k_{d-1}] x [0,m]` as a finite
//! subgraph of the nearest-neighbour lattice `Z^d`.
//!
//! Vertices are indexed lexicographically by their coordinates (first axis
//! most significant) and edges lexicographically by `(lower endpoint, axis)`,
//! so every index is reproducible across runs and platforms. The last axis is
//! the vertical one: the bottom face `F_0` and top face `F_m` are the vertices
//! with minimal and maximal last coordinate.

mod plaquette;

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use plaquette::{diamond_adjacent, diamond_connected_edges, diamond_neighbors, Plaquette};

use crate::UnionFind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("invalid cylinder: {0}")]
    InvalidSpec(String),
    #[error("diamond connectivity is undefined for an empty edge set")]
    EmptyEdgeSet,
    #[error("edge index {index} out of range for a graph with {edges} edges")]
    EdgeOutOfRange { index: usize, edges: usize },
}

/// Dimension and side lengths of `B(k, m)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CylinderSpec {
    pub d: usize,
    pub k: Vec<u32>,
    pub m: u32,
}

impl CylinderSpec {
    pub fn new(d: usize, k: Vec<u32>, m: u32) -> Result<Self, LatticeError> {
        let spec = Self { d, k, m };
        spec.validate()?;
        Ok(spec)
    }

    /// The square cylinder `B((n, ..., n), h)`.
    pub fn square(d: usize, n: u32, h: u32) -> Result<Self, LatticeError> {
        Self::new(d, vec![n; d.saturating_sub(1)], h)
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        if self.d < 2 {
            return Err(LatticeError::InvalidSpec(format!(
                "dimension must be at least 2, got {}",
                self.d
            )));
        }
        if self.k.len() != self.d - 1 {
            return Err(LatticeError::InvalidSpec(format!(
                "expected {} side lengths for d = {}, got {}",
                self.d - 1,
                self.d,
                self.k.len()
            )));
        }
        if let Some(i) = self.k.iter().position(|&k| k == 0) {
            return Err(LatticeError::InvalidSpec(format!(
                "side length k[{i}] must be positive"
            )));
        }
        if self.m == 0 {
            return Err(LatticeError::InvalidSpec(
                "height m must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Number of vertices of a face, `prod (k_i + 1)`.
    pub fn face_size(&self) -> usize {
        self.k.iter().map(|&k| k as usize + 1).product()
    }

    pub fn vertex_count(&self) -> usize {
        self.face_size() * (self.m as usize + 1)
    }

    /// Closed-form edge count: for every axis, the unit steps along it.
    pub fn edge_count(&self) -> usize {
        let sides: Vec<usize> = self
            .k
            .iter()
            .map(|&k| k as usize)
            .chain(std::iter::once(self.m as usize))
            .collect();
        (0..sides.len())
            .map(|a| {
                sides
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| if i == a { s } else { s + 1 })
                    .product::<usize>()
            })
            .sum()
    }

    pub fn vertex_box(&self) -> VertexBox {
        let mut hi: Vec<i64> = self.k.iter().map(|&k| k as i64).collect();
        hi.push(self.m as i64);
        VertexBox::new(vec![0; self.d], hi)
    }
}

/// An axis-aligned box of lattice points, bounds inclusive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl VertexBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box bounds of different dimension");
        Self { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| l > h)
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| l <= v && v <= h)
    }

    pub fn contains_box(&self, other: &VertexBox) -> bool {
        other.is_empty() || (self.contains(&other.lo) && self.contains(&other.hi))
    }

    pub fn intersect(&self, other: &VertexBox) -> VertexBox {
        VertexBox::new(
            self.lo
                .iter()
                .zip(&other.lo)
                .map(|(a, b)| *a.max(b))
                .collect(),
            self.hi
                .iter()
                .zip(&other.hi)
                .map(|(a, b)| *a.min(b))
                .collect(),
        )
    }

    pub fn translate(&self, by: &[i64]) -> VertexBox {
        VertexBox::new(
            self.lo.iter().zip(by).map(|(a, b)| a + b).collect(),
            self.hi.iter().zip(by).map(|(a, b)| a + b).collect(),
        )
    }

    /// Largest side length, which is the diameter of the box in the max-norm sense.
    pub fn diameter(&self) -> i64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| h - l)
            .max()
            .unwrap_or(0)
    }

    pub fn num_points(&self) -> usize {
        if self.is_empty() {
            return 0;
        }
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l + 1) as usize)
            .product()
    }

    /// Every lattice point of the box in lexicographic order.
    pub fn points(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        let total = self.num_points();
        let mut current = self.lo.clone();
        (0..total).map(move |i| {
            let out = current.clone();
            if i + 1 < total {
                for a in (0..current.len()).rev() {
                    if current[a] < self.hi[a] {
                        current[a] += 1;
                        break;
                    }
                    current[a] = self.lo[a];
                }
            }
            out
        })
    }
}

/// An edge `<x, x + e_axis>` of `Z^d`, identified by its lower endpoint.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeEdge {
    pub base: Vec<i64>,
    pub axis: usize,
}

impl LatticeEdge {
    pub fn new(base: Vec<i64>, axis: usize) -> Self {
        assert!(
            axis < base.len(),
            "axis {axis} out of range for d = {}",
            base.len()
        );
        Self { base, axis }
    }

    /// Edge joining two nearest neighbours, in either order.
    pub fn between(x: &[i64], y: &[i64]) -> Option<Self> {
        if x.len() != y.len() {
            return None;
        }
        let diffs: Vec<(usize, i64)> = x
            .iter()
            .zip(y)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, (a, b))| (i, b - a))
            .collect();
        match diffs.as_slice() {
            [(axis, 1)] => Some(Self::new(x.to_vec(), *axis)),
            [(axis, -1)] => Some(Self::new(y.to_vec(), *axis)),
            _ => None,
        }
    }

    pub fn upper(&self) -> Vec<i64> {
        let mut up = self.base.clone();
        up[self.axis] += 1;
        up
    }

    pub fn plaquette(&self) -> Plaquette {
        Plaquette::of(self)
    }

    /// Both endpoints lie in the box.
    pub fn within(&self, b: &VertexBox) -> bool {
        b.contains(&self.base) && b.contains(&self.upper())
    }
}

/// An edge of a [`LatticeGraph`], `lo < hi` being vertex indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub lo: usize,
    pub hi: usize,
    pub axis: usize,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if v == self.lo {
            self.hi
        } else {
            self.lo
        }
    }
}

/// A finite set of edge indices of one graph.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeSet(BTreeSet<usize>);

impl EdgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn all(g: &LatticeGraph) -> Self {
        (0..g.num_edges()).collect()
    }

    pub fn insert(&mut self, e: usize) -> bool {
        self.0.insert(e)
    }

    pub fn remove(&mut self, e: usize) -> bool {
        self.0.remove(&e)
    }

    pub fn contains(&self, e: usize) -> bool {
        self.0.contains(&e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn to_mask(&self, num_edges: usize) -> Vec<bool> {
        let mut mask = vec![false; num_edges];
        for e in self.iter() {
            mask[e] = true;
        }
        mask
    }

    pub fn check(&self, g: &LatticeGraph) -> Result<(), LatticeError> {
        match self.0.iter().next_back() {
            Some(&index) if index >= g.num_edges() => Err(LatticeError::EdgeOutOfRange {
                index,
                edges: g.num_edges(),
            }),
            _ => Ok(()),
        }
    }

    /// `V(E)`, the sum of the capacities of the edges.
    pub fn value(&self, capacities: &[f64]) -> f64 {
        self.iter().map(|e| capacities[e]).sum()
    }
}

impl FromIterator<usize> for EdgeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

const NO_EDGE: usize = usize::MAX;

/// Vertices and nearest-neighbour edges of a box of `Z^d`, with its bottom and
/// top faces along the last axis.
#[derive(Clone, Debug)]
pub struct LatticeGraph {
    bounds: VertexBox,
    strides: Vec<usize>,
    edges: Vec<Edge>,
    // vertex * d + axis -> index of the edge <v, v + e_axis>
    up_edge: Vec<usize>,
    bottom: Vec<usize>,
    top: Vec<usize>,
}

/// Builds `B(k, m)` with lexicographic vertex and edge indexing.
pub fn build_cylinder(spec: &CylinderSpec) -> Result<LatticeGraph, LatticeError> {
    spec.validate()?;
    LatticeGraph::from_box(spec.vertex_box())
}

impl LatticeGraph {
    /// Graph of an arbitrary box. The last axis must have positive extent so
    /// that the bottom and top faces are disjoint.
    pub fn from_box(bounds: VertexBox) -> Result<Self, LatticeError> {
        let d = bounds.dim();
        if d < 2 {
            return Err(LatticeError::InvalidSpec(format!(
                "dimension must be at least 2, got {d}"
            )));
        }
        if bounds.is_empty() || bounds.hi[d - 1] <= bounds.lo[d - 1] {
            return Err(LatticeError::InvalidSpec(format!(
                "box {:?}..={:?} needs a positive vertical extent",
                bounds.lo, bounds.hi
            )));
        }
        let sides: Vec<usize> = bounds
            .lo
            .iter()
            .zip(&bounds.hi)
            .map(|(l, h)| (h - l + 1) as usize)
            .collect();
        let mut strides = vec![1usize; d];
        for a in (0..d - 1).rev() {
            strides[a] = strides[a + 1] * sides[a + 1];
        }
        let n = bounds.num_points();
        let mut edges = Vec::new();
        let mut up_edge = vec![NO_EDGE; n * d];
        let mut bottom = Vec::new();
        let mut top = Vec::new();
        for (v, x) in bounds.points().enumerate() {
            for a in 0..d {
                if x[a] < bounds.hi[a] {
                    up_edge[v * d + a] = edges.len();
                    edges.push(Edge {
                        lo: v,
                        hi: v + strides[a],
                        axis: a,
                    });
                }
            }
            if x[d - 1] == bounds.lo[d - 1] {
                bottom.push(v);
            } else if x[d - 1] == bounds.hi[d - 1] {
                top.push(v);
            }
        }
        Ok(Self {
            bounds,
            strides,
            edges,
            up_edge,
            bottom,
            top,
        })
    }

    pub fn d(&self) -> usize {
        self.bounds.dim()
    }

    pub fn bounds(&self) -> &VertexBox {
        &self.bounds
    }

    pub fn num_vertices(&self) -> usize {
        self.up_edge.len() / self.d()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    /// `F_0`.
    pub fn bottom(&self) -> &[usize] {
        &self.bottom
    }

    /// `F_m`.
    pub fn top(&self) -> &[usize] {
        &self.top
    }

    pub fn height(&self) -> i64 {
        let d = self.d();
        self.bounds.hi[d - 1] - self.bounds.lo[d - 1]
    }

    pub fn coords(&self, v: usize) -> Vec<i64> {
        let mut rest = v;
        self.strides
            .iter()
            .zip(&self.bounds.lo)
            .map(|(&s, &lo)| {
                let c = rest / s;
                rest %= s;
                lo + c as i64
            })
            .collect()
    }

    /// Last coordinate of `v`.
    pub fn level(&self, v: usize) -> i64 {
        let d = self.d();
        let side = (self.bounds.hi[d - 1] - self.bounds.lo[d - 1] + 1) as usize;
        self.bounds.lo[d - 1] + (v % side) as i64
    }

    pub fn is_bottom(&self, v: usize) -> bool {
        self.level(v) == self.bounds.lo[self.d() - 1]
    }

    pub fn is_top(&self, v: usize) -> bool {
        self.level(v) == self.bounds.hi[self.d() - 1]
    }

    pub fn vertex_at(&self, x: &[i64]) -> Option<usize> {
        if x.len() != self.d() || !self.bounds.contains(x) {
            return None;
        }
        Some(
            x.iter()
                .zip(&self.bounds.lo)
                .zip(&self.strides)
                .map(|((c, lo), s)| (c - lo) as usize * s)
                .sum(),
        )
    }

    /// Index of the `Z^d` edge, if both its endpoints are in the box.
    pub fn edge_index(&self, e: &LatticeEdge) -> Option<usize> {
        let v = self.vertex_at(&e.base)?;
        match self.up_edge[v * self.d() + e.axis] {
            NO_EDGE => None,
            i => Some(i),
        }
    }

    /// The edge `<v, v + e_axis>`, if its upper end is in the box.
    pub fn up_edge(&self, v: usize, axis: usize) -> Option<usize> {
        match self.up_edge[v * self.d() + axis] {
            NO_EDGE => None,
            i => Some(i),
        }
    }

    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        let d = self.d();
        (0..d)
            .map(|a| self.up_edge[lo * d + a])
            .find(|&e| e != NO_EDGE && self.edges[e].hi == hi)
    }

    pub fn lattice_edge(&self, e: usize) -> LatticeEdge {
        let edge = self.edges[e];
        LatticeEdge::new(self.coords(edge.lo), edge.axis)
    }

    /// `(edge, neighbour)` pairs around `v`.
    pub fn incident(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let d = self.d();
        (0..d).flat_map(move |a| {
            let up = self.up_edge[v * d + a];
            let up = (up != NO_EDGE).then(|| (up, v + self.strides[a]));
            let down = v
                .checked_sub(self.strides[a])
                .filter(|_| self.coords_axis(v, a) > self.bounds.lo[a])
                .map(|w| (self.up_edge[w * d + a], w));
            up.into_iter().chain(down)
        })
    }

    fn coords_axis(&self, v: usize, a: usize) -> i64 {
        let side = (self.bounds.hi[a] - self.bounds.lo[a] + 1) as usize;
        self.bounds.lo[a] + ((v / self.strides[a]) % side) as i64
    }

    /// Vertices reachable from `F_0` without using edges flagged in `removed`.
    pub fn reachable_from_bottom(&self, removed: &[bool]) -> Vec<bool> {
        let mut seen = vec![false; self.num_vertices()];
        let mut queue: VecDeque<usize> = self.bottom.iter().copied().collect();
        for &v in &self.bottom {
            seen[v] = true;
        }
        while let Some(v) = queue.pop_front() {
            for (e, w) in self.incident(v) {
                if !removed[e] && !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    pub(crate) fn separated_by_mask(&self, removed: &[bool]) -> bool {
        let seen = self.reachable_from_bottom(removed);
        !self.top.iter().any(|&v| seen[v])
    }

    /// Closed-form vertex and edge counts for this box.
    pub fn expected_counts(&self) -> (usize, usize) {
        let sides: Vec<usize> = self
            .bounds
            .lo
            .iter()
            .zip(&self.bounds.hi)
            .map(|(l, h)| (h - l) as usize)
            .collect();
        let vertices = sides.iter().map(|s| s + 1).product();
        let edges = (0..sides.len())
            .map(|a| {
                sides
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| if i == a { s } else { s + 1 })
                    .product::<usize>()
            })
            .sum();
        (vertices, edges)
    }
}

/// Whether removing `set` leaves no path from `F_0` to `F_m`.
pub fn is_separating(set: &EdgeSet, g: &LatticeGraph) -> bool {
    g.separated_by_mask(&set.to_mask(g.num_edges()))
}

/// Whether `set` separates and no proper subset does, i.e. it is an
/// `(F_0, F_m)`-cut. One separation test per member.
pub fn is_cut(set: &EdgeSet, g: &LatticeGraph) -> bool {
    let mut mask = set.to_mask(g.num_edges());
    if !g.separated_by_mask(&mask) {
        return false;
    }
    for e in set.iter() {
        mask[e] = false;
        let still = g.separated_by_mask(&mask);
        mask[e] = true;
        if still {
            return false;
        }
    }
    true
}

/// Whether the edges of `set` form a single component under plaquette
/// intersection.
pub fn diamond_connected(set: &EdgeSet, g: &LatticeGraph) -> Result<bool, LatticeError> {
    set.check(g)?;
    let edges: Vec<LatticeEdge> = set.iter().map(|e| g.lattice_edge(e)).collect();
    diamond_connected_edges(&edges)
}

/// Union-find over `items` joining every adjacent pair, returning the number of components.
pub(crate) fn count_components<T>(items: &[T], adjacent: impl Fn(&T, &T) -> bool) -> usize {
    let mut uf = UnionFind::new(items.len());
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            if adjacent(&items[i], &items[j]) {
                uf.union(i, j);
            }
        }
    }
    uf.count_sets()
}

#[derive(Serialize)]
struct GraphJson<'a> {
    d: usize,
    lo: &'a [i64],
    hi: &'a [i64],
    vertices: Vec<Vec<i64>>,
    edges: Vec<[usize; 2]>,
    bottom: &'a [usize],
    top: &'a [usize],
}

impl Serialize for LatticeGraph {
    /// `{d, lo, hi, vertices: [[coords]], edges: [[u, v]], bottom, top}`;
    /// array positions are the vertex and edge indices.
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        GraphJson {
            d: self.d(),
            lo: &self.bounds.lo,
            hi: &self.bounds.hi,
            vertices: (0..self.num_vertices()).map(|v| self.coords(v)).collect(),
            edges: self.edges.iter().map(|e| [e.lo, e.hi]).collect(),
            bottom: &self.bottom,
            top: &self.top,
        }
        .serialize(serializer)
    }
}
