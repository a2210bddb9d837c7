use serde::{Deserialize, Serialize};

use super::RenormError;
use crate::capacity::CapacityField;
use crate::lattice::{LatticeGraph, VertexBox};
use crate::UnionFind;

/// An open cluster of a box: a component of the open edges lying in it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    pub size: usize,
    /// Bit `2a` for the face `x_a = lo_a` of the box, `2a + 1` for `x_a = hi_a`.
    pub faces: u64,
    /// `max_a sup |x_a - y_a|` over the cluster.
    pub diameter: i64,
}

impl Cluster {
    /// Meets all `2d` faces of the inner boundary.
    pub fn crossing(&self, d: usize) -> bool {
        self.faces == (1u64 << (2 * d)) - 1
    }
}

/// Open clusters of `b`, using only edges with both ends in the box.
pub fn box_clusters(
    g: &LatticeGraph,
    field: &CapacityField,
    b: &VertexBox,
) -> Result<Vec<Cluster>, RenormError> {
    if b.dim() != g.d() {
        return Err(RenormError::Dimension {
            expected: g.d(),
            got: b.dim(),
        });
    }
    if !g.bounds().contains_box(b) || field.len() != g.num_edges() {
        return Err(RenormError::Coverage {
            lo: b.lo.clone(),
            hi: b.hi.clone(),
        });
    }
    let d = b.dim();
    let points: Vec<Vec<i64>> = b.points().collect();
    let mut strides = vec![1usize; d];
    for a in (0..d - 1).rev() {
        strides[a] = strides[a + 1] * (b.hi[a + 1] - b.lo[a + 1] + 1) as usize;
    }
    let mut uf = UnionFind::new(points.len());
    for (i, x) in points.iter().enumerate() {
        let v = g.vertex_at(x).expect("box inside the graph");
        for a in 0..d {
            if x[a] < b.hi[a] {
                let e = g.up_edge(v, a).expect("edge inside the graph");
                if field.get(e) != 0.0 {
                    uf.union(i, i + strides[a]);
                }
            }
        }
    }
    let mut slot = vec![usize::MAX; points.len()];
    let mut out: Vec<(Cluster, Vec<i64>, Vec<i64>)> = Vec::new();
    for (i, x) in points.iter().enumerate() {
        let r = uf.find(i);
        if slot[r] == usize::MAX {
            slot[r] = out.len();
            out.push((
                Cluster {
                    size: 0,
                    faces: 0,
                    diameter: 0,
                },
                x.clone(),
                x.clone(),
            ));
        }
        let (c, lo, hi) = &mut out[slot[r]];
        c.size += 1;
        for a in 0..d {
            if x[a] == b.lo[a] {
                c.faces |= 1 << (2 * a);
            }
            if x[a] == b.hi[a] {
                c.faces |= 1 << (2 * a + 1);
            }
            lo[a] = lo[a].min(x[a]);
            hi[a] = hi[a].max(x[a]);
        }
    }
    Ok(out
        .into_iter()
        .map(|(mut c, lo, hi)| {
            c.diameter = lo.iter().zip(&hi).map(|(l, h)| h - l).max().unwrap_or(0);
            c
        })
        .collect())
}

/// `U(b)`: some open cluster of the box is crossing.
pub fn event_u(
    g: &LatticeGraph,
    field: &CapacityField,
    b: &VertexBox,
) -> Result<bool, RenormError> {
    Ok(box_clusters(g, field, b)?
        .iter()
        .any(|c| c.crossing(b.dim())))
}

/// `W(b, m)`: exactly one open cluster of the box has diameter at least `m`.
pub fn event_w(
    g: &LatticeGraph,
    field: &CapacityField,
    b: &VertexBox,
    m: i64,
) -> Result<bool, RenormError> {
    if m > b.diameter() {
        return Err(RenormError::Threshold {
            m,
            diameter: b.diameter(),
        });
    }
    Ok(box_clusters(g, field, b)?
        .iter()
        .filter(|c| c.diameter >= m)
        .count()
        == 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum BoxEvent {
    U,
    W { m: i64 },
}

/// Largest box accepted by [`enumerate_event`].
pub const MAX_ENUMERATION_EDGES: usize = 20;

/// Exhaustive census of an event over all open/closed configurations of a box.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCensus {
    pub edges: usize,
    /// `by_open[j]`: configurations with `j` open edges in which the event holds.
    pub by_open: Vec<u64>,
}

impl EventCensus {
    pub fn count(&self) -> u64 {
        self.by_open.iter().sum()
    }

    /// Probability under Bernoulli(p) bond percolation.
    pub fn probability(&self, p: f64) -> f64 {
        self.by_open
            .iter()
            .enumerate()
            .map(|(j, &c)| c as f64 * p.powi(j as i32) * (1.0 - p).powi((self.edges - j) as i32))
            .sum()
    }
}

/// Enumerates all `2^E` configurations of the box (`E <= 20`).
pub fn enumerate_event(b: &VertexBox, event: BoxEvent) -> Result<EventCensus, RenormError> {
    let g = LatticeGraph::from_box(b.clone())?;
    let e = g.num_edges();
    if e > MAX_ENUMERATION_EDGES {
        return Err(RenormError::TooLarge {
            edges: e,
            limit: MAX_ENUMERATION_EDGES,
        });
    }
    let mut by_open = vec![0u64; e + 1];
    for mask in 0u64..1 << e {
        let field = CapacityField::from_values((0..e).map(|i| (mask >> i & 1) as f64).collect());
        let holds = match event {
            BoxEvent::U => event_u(&g, &field, b)?,
            BoxEvent::W { m } => event_w(&g, &field, b, m)?,
        };
        if holds {
            by_open[mask.count_ones() as usize] += 1;
        }
    }
    Ok(EventCensus { edges: e, by_open })
}
