//! Block renormalization: blocks `B_K(x) = Kx + Lambda(K)`, the box events
//! `U` (open crossing cluster) and `W` (unique open cluster of large
//! diameter), the block process `X_K`, its dependency structure and the
//! passage from good block paths back to open paths of the lattice.
//!
//! `Lambda(K)` is the half-open box `]-K/2, K/2]^d`, so on the lattice
//! `B_K(x)` is the vertex box `[Kx - K/2 + 1, Kx + K/2]`. An edge lies in a
//! box when both its endpoints do, and an edge is open when its capacity is
//! nonzero.

mod events;
mod paths;

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity::{sample_capacities, CapacityDistribution, CapacityField, SeedSpec};
use crate::lattice::{LatticeEdge, LatticeError, LatticeGraph, VertexBox};
use crate::stats::Proportion;

pub use events::{
    box_clusters, enumerate_event, event_u, event_w, BoxEvent, Cluster, EventCensus,
    MAX_ENUMERATION_EDGES,
};
pub use paths::{
    brute_force_block_packing, construct_crossing_path, count_block_disjoint_paths,
    count_good_block_paths, BlockPathPacking, Counterexample, CrossingOutcome,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenormError {
    #[error("block side K = {0} must be even and positive")]
    OddK(u32),
    #[error("diameter threshold {m} exceeds the box diameter {diameter}")]
    Threshold { m: i64, diameter: i64 },
    #[error("the field does not cover the box {lo:?}..={hi:?}")]
    Coverage { lo: Vec<i64>, hi: Vec<i64> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("box has {edges} edges; exhaustive enumeration is limited to {limit}")]
    TooLarge { edges: usize, limit: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

fn check_k(k: u32) -> Result<(), RenormError> {
    if k == 0 || k % 2 == 1 {
        return Err(RenormError::OddK(k));
    }
    Ok(())
}

/// The vertex box of `B_K(x)`.
pub fn block_box(x: &[i64], k: u32) -> Result<VertexBox, RenormError> {
    check_k(k)?;
    let k = k as i64;
    Ok(VertexBox::new(
        x.iter().map(|&c| k * c - k / 2 + 1).collect(),
        x.iter().map(|&c| k * c + k / 2).collect(),
    ))
}

/// Vertex box covered by the blocks of a box of block indices.
pub fn block_union(blocks: &VertexBox, k: u32) -> Result<VertexBox, RenormError> {
    let lo = block_box(&blocks.lo, k)?;
    let hi = block_box(&blocks.hi, k)?;
    Ok(VertexBox::new(lo.lo, hi.hi))
}

/// Vertex box holding every edge the block process looks at for the blocks
/// of `blocks`: each block grown by `K/2` on all sides.
pub fn support_region(blocks: &VertexBox, k: u32) -> Result<VertexBox, RenormError> {
    let u = block_union(blocks, k)?;
    let half = (k / 2) as i64;
    Ok(VertexBox::new(
        u.lo.iter().map(|c| c - half).collect(),
        u.hi.iter().map(|c| c + half).collect(),
    ))
}

/// `A_K`: indices of the blocks meeting the box `a`.
pub fn rescale_region(a: &VertexBox, k: u32) -> Result<VertexBox, RenormError> {
    check_k(k)?;
    let k = k as i64;
    // B_K(x) meets [lo, hi] on an axis iff Kx - K/2 + 1 <= hi and Kx + K/2 >= lo
    Ok(VertexBox::new(
        a.lo.iter()
            .map(|&lo| (lo - k / 2).div_euclid(k) + ((lo - k / 2).rem_euclid(k) != 0) as i64)
            .collect(),
        a.hi.iter()
            .map(|&hi| (hi + k / 2 - 1).div_euclid(k))
            .collect(),
    ))
}

/// The shifts `Y = {+-K/2 e_i}`, in the order `+e_1, -e_1, +e_2, ...`.
pub fn shifts(d: usize, k: u32) -> Vec<Vec<i64>> {
    let half = (k / 2) as i64;
    let mut out = Vec::with_capacity(2 * d);
    for a in 0..d {
        for s in [half, -half] {
            let mut y = vec![0; d];
            y[a] = s;
            out.push(y);
        }
    }
    out
}

/// Diameter threshold used for `W` in the block process: `ceil(K/3)`.
pub fn w_threshold(k: u32) -> i64 {
    (k as i64 + 2) / 3
}

/// The `1 + 1 + 2d` boxes examined for `X_K(x)`: the block for `U`, the block
/// for `W`, then the shifted boxes.
pub fn event_boxes(x: &[i64], k: u32) -> Result<Vec<VertexBox>, RenormError> {
    let b = block_box(x, k)?;
    let mut out = vec![b.clone()];
    out.extend(shifts(x.len(), k).iter().map(|y| b.translate(y)));
    Ok(out)
}

/// Class label in `1..=3^d`: coordinates taken mod 3, read in base 3.
pub fn class_of(x: &[i64]) -> usize {
    1 + x
        .iter()
        .rev()
        .fold(0usize, |acc, &c| acc * 3 + c.rem_euclid(3) as usize)
}

/// Every lattice edge read when computing `X_K(x)`, sorted.
pub fn dependency_support(x: &[i64], k: u32) -> Result<Vec<LatticeEdge>, RenormError> {
    let mut out = Vec::new();
    for b in event_boxes(x, k)? {
        for p in b.points() {
            for a in 0..p.len() {
                if p[a] < b.hi[a] {
                    out.push(LatticeEdge::new(p.clone(), a));
                }
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Event flags of one block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockEvents {
    pub index: Vec<i64>,
    /// `U(B_K(x))`.
    pub u: bool,
    /// `W(B_K(x), ceil(K/3))`.
    pub w: bool,
    /// `W(B_K(x) + y, ceil(K/3))` for `y` in [`shifts`] order.
    pub w_shifted: Vec<bool>,
}

impl BlockEvents {
    /// `X_K(x)`.
    pub fn good(&self) -> bool {
        self.u && self.w && self.w_shifted.iter().all(|&b| b)
    }
}

/// `X_K` over a box of block indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockProcess {
    pub k: u32,
    pub domain: VertexBox,
    /// Lexicographic over `domain`.
    pub events: Vec<BlockEvents>,
}

impl BlockProcess {
    pub fn d(&self) -> usize {
        self.domain.dim()
    }

    fn position(&self, x: &[i64]) -> Option<usize> {
        if x.len() != self.d() || !self.domain.contains(x) {
            return None;
        }
        let mut pos = 0usize;
        for a in 0..x.len() {
            let side = (self.domain.hi[a] - self.domain.lo[a] + 1) as usize;
            pos = pos * side + (x[a] - self.domain.lo[a]) as usize;
        }
        Some(pos)
    }

    pub fn get(&self, x: &[i64]) -> Option<&BlockEvents> {
        self.position(x).map(|i| &self.events[i])
    }

    /// `X_K(x)`; `None` outside the domain.
    pub fn good(&self, x: &[i64]) -> Option<bool> {
        self.get(x).map(BlockEvents::good)
    }

    pub fn count_good(&self) -> usize {
        self.events.iter().filter(|e| e.good()).count()
    }

    /// One row per block: index coordinates, `u`, `w`, the shifted `w` flags
    /// and `x`, flags written as 0/1.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let d = self.d();
        let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        header.push("u".into());
        header.push("w".into());
        for a in 1..=d {
            header.push(format!("w_plus{a}"));
            header.push(format!("w_minus{a}"));
        }
        header.push("x_k".into());
        writeln!(out, "{}", header.join(","))?;
        for ev in &self.events {
            let mut row: Vec<String> = ev.index.iter().map(|c| c.to_string()).collect();
            row.push((ev.u as u8).to_string());
            row.push((ev.w as u8).to_string());
            row.extend(ev.w_shifted.iter().map(|&b| (b as u8).to_string()));
            row.push((ev.good() as u8).to_string());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Evaluates the events of one block.
pub fn block_events(
    g: &LatticeGraph,
    field: &CapacityField,
    x: &[i64],
    k: u32,
) -> Result<BlockEvents, RenormError> {
    let boxes = event_boxes(x, k)?;
    let m = w_threshold(k);
    let own = box_clusters(g, field, &boxes[0])?;
    let u = own.iter().any(|c| c.crossing(x.len()));
    let w = own.iter().filter(|c| c.diameter >= m).count() == 1;
    let w_shifted = boxes[1..]
        .iter()
        .map(|b| event_w(g, field, b, m))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BlockEvents {
        index: x.to_vec(),
        u,
        w,
        w_shifted,
    })
}

/// Computes `X_K` on every block of `domain`, in parallel.
pub fn block_process(
    g: &LatticeGraph,
    field: &CapacityField,
    k: u32,
    domain: &VertexBox,
) -> Result<BlockProcess, RenormError> {
    check_k(k)?;
    if domain.dim() != g.d() {
        return Err(RenormError::Dimension {
            expected: g.d(),
            got: domain.dim(),
        });
    }
    let needed = support_region(domain, k)?;
    if !g.bounds().contains_box(&needed) {
        let missing = domain
            .points()
            .flat_map(|x| event_boxes(&x, k).unwrap())
            .find(|b| !g.bounds().contains_box(b))
            .unwrap_or(needed);
        return Err(RenormError::Coverage {
            lo: missing.lo,
            hi: missing.hi,
        });
    }
    let blocks: Vec<Vec<i64>> = domain.points().collect();
    let events = blocks
        .par_iter()
        .map(|x| block_events(g, field, x, k))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BlockProcess {
        k,
        domain: domain.clone(),
        events,
    })
}

/// Monte Carlo estimate of `delta_K = P[X_K(0) = 0]` for Bernoulli(p) bond
/// percolation, with a Wilson interval at `confidence`.
pub fn estimate_delta_k(
    d: usize,
    k: u32,
    p: f64,
    replicates: u64,
    global_seed: u64,
    confidence: f64,
) -> Result<Proportion, RenormError> {
    check_k(k)?;
    if replicates == 0 {
        return Err(RenormError::Precondition(
            "at least one replicate is needed".into(),
        ));
    }
    let origin = vec![0i64; d];
    let region = support_region(&VertexBox::new(origin.clone(), origin.clone()), k)?;
    let g = LatticeGraph::from_box(region)?;
    let dist = CapacityDistribution::Bernoulli { p };
    let bad: Vec<bool> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let field = sample_capacities(&g, &dist, SeedSpec::new(global_seed, r));
            block_events(&g, &field, &origin, k).map(|ev| !ev.good())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let count = bad.iter().filter(|&&b| b).count() as u64;
    Ok(Proportion::new(count, replicates, confidence))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_partition_the_line() {
        let k = 4;
        for v in -20i64..20 {
            let owners: Vec<i64> = (-8..8)
                .filter(|&x| block_box(&[x, 0], k).unwrap().contains(&[v, 0]))
                .collect();
            assert_eq!(owners.len(), 1, "vertex {v}");
        }
        assert_eq!(
            block_box(&[0, 0], 2).unwrap(),
            VertexBox::new(vec![0, 0], vec![1, 1])
        );
        assert!(matches!(block_box(&[0], 3), Err(RenormError::OddK(3))));
    }

    #[test]
    fn rescaled_regions() {
        let a = VertexBox::new(vec![0, 0], vec![8, 4]);
        assert_eq!(
            rescale_region(&a, 4).unwrap(),
            VertexBox::new(vec![0, 0], vec![2, 1])
        );
        let lambda = block_box(&[0, 0], 6).unwrap();
        assert_eq!(
            rescale_region(&lambda, 6).unwrap(),
            VertexBox::new(vec![0, 0], vec![0, 0])
        );
        let origin = VertexBox::new(vec![0, 0, 0], vec![0, 0, 0]);
        assert_eq!(rescale_region(&origin, 8).unwrap(), origin);
        // against direct intersection
        for k in [2u32, 4, 6] {
            for lo in -7i64..7 {
                for hi in lo..lo + 9 {
                    let a = VertexBox::new(vec![lo, 0], vec![hi, 0]);
                    let r = rescale_region(&a, k).unwrap();
                    for x in -10i64..10 {
                        let meets = !block_box(&[x, 0], k).unwrap().intersect(&a).is_empty();
                        assert_eq!(
                            meets,
                            r.lo[0] <= x && x <= r.hi[0],
                            "k={k} [{lo},{hi}] x={x}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn classes() {
        assert_eq!(class_of(&[0, 0]), 1);
        assert_eq!(class_of(&[4, 7]), class_of(&[1, 1]));
        assert_eq!(class_of(&[3, 3]), class_of(&[0, 0]));
        assert_ne!(class_of(&[1, 0]), class_of(&[0, 0]));
        assert_eq!(class_of(&[-1, -1, -1]), 27);
        let labels: std::collections::BTreeSet<usize> = VertexBox::new(vec![0, 0], vec![2, 2])
            .points()
            .map(|x| class_of(&x))
            .collect();
        assert_eq!(labels.len(), 9);
    }

    #[test]
    fn support_stays_in_the_event_block() {
        let k = 4;
        let x = [1i64, -2];
        let event_block = block_union(&VertexBox::new(vec![0, -3], vec![2, -1]), k).unwrap();
        let support = dependency_support(&x, k).unwrap();
        assert!(support.iter().all(|e| e.within(&event_block)));
        let neighbour = dependency_support(&[2, -2], k).unwrap();
        assert!(support.iter().any(|e| neighbour.binary_search(e).is_ok()));
        let same_class = dependency_support(&[4, -2], k).unwrap();
        assert!(!support.iter().any(|e| same_class.binary_search(e).is_ok()));
    }

    fn constant_process(value: f64, k: u32) -> BlockProcess {
        let domain = VertexBox::new(vec![0, 0], vec![1, 2]);
        let g = LatticeGraph::from_box(support_region(&domain, k).unwrap()).unwrap();
        let field = CapacityField::constant(g.num_edges(), value);
        block_process(&g, &field, k, &domain).unwrap()
    }

    #[test]
    fn constant_fields() {
        let open = constant_process(1.0, 4);
        assert_eq!(open.count_good(), open.events.len());
        let closed = constant_process(0.0, 4);
        assert_eq!(closed.count_good(), 0);
        assert!(closed.events.iter().all(|e| !e.u && !e.w));
    }

    #[test]
    fn coverage_is_checked() {
        let domain = VertexBox::new(vec![0, 0], vec![1, 1]);
        let g = LatticeGraph::from_box(block_union(&domain, 4).unwrap()).unwrap();
        let field = CapacityField::constant(g.num_edges(), 1.0);
        assert!(matches!(
            block_process(&g, &field, 4, &domain),
            Err(RenormError::Coverage { .. })
        ));
    }

    #[test]
    fn csv_dump() {
        let mut buf = Vec::new();
        constant_process(1.0, 2).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("x1,x2,u,w,w_plus1,w_minus1,w_plus2,w_minus2,x_k")
        );
        assert_eq!(lines.next(), Some("0,0,1,1,1,1,1,1,1"));
        assert_eq!(text.lines().count(), 7);
    }

    #[test]
    fn delta_at_the_extremes() {
        assert_eq!(
            estimate_delta_k(2, 4, 1.0, 50, 1, 0.95).unwrap().estimate,
            0.0
        );
        assert_eq!(
            estimate_delta_k(2, 4, 0.0, 50, 1, 0.95).unwrap().estimate,
            1.0
        );
    }
}
