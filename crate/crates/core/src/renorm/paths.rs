use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{block_box, block_union, BlockProcess, RenormError};
use crate::capacity::CapacityField;
use crate::flow::network::Network;
use crate::flow::oracle::max_disjoint_packing;
use crate::lattice::{LatticeGraph, VertexBox};

/// Vertex-disjoint L1 paths of good blocks from the bottom block layer of a
/// rescaled cylinder to its top layer.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPathPacking {
    pub paths: Vec<Vec<Vec<i64>>>,
}

impl BlockPathPacking {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

fn strides(b: &VertexBox) -> Vec<usize> {
    let d = b.dim();
    let mut s = vec![1usize; d];
    for a in (0..d - 1).rev() {
        s[a] = s[a + 1] * (b.hi[a + 1] - b.lo[a + 1] + 1) as usize;
    }
    s
}

/// Maximal packing of vertex-disjoint good-block paths inside `cylinder`
/// (block indices), by unit vertex capacities on the split graph.
pub fn count_good_block_paths(
    cylinder: &VertexBox,
    good: impl Fn(&[i64]) -> bool,
) -> BlockPathPacking {
    let d = cylinder.dim();
    let points: Vec<Vec<i64>> = cylinder.points().collect();
    let n = points.len();
    let st = strides(cylinder);
    let (source, sink) = (2 * n, 2 * n + 1);
    let mut net = Network::<i64>::new(2 * n + 2);
    // (tail, head, arc id) of every arc that can carry a path
    let mut arcs: Vec<(usize, usize, usize)> = Vec::new();
    let mut add = |net: &mut Network<i64>, u: usize, v: usize| {
        let id = net.add_arc(u, v, 1);
        arcs.push((u, v, id));
    };
    for (i, x) in points.iter().enumerate() {
        if !good(x) {
            continue;
        }
        add(&mut net, 2 * i, 2 * i + 1);
        if x[d - 1] == cylinder.lo[d - 1] {
            add(&mut net, source, 2 * i);
        }
        if x[d - 1] == cylinder.hi[d - 1] {
            add(&mut net, 2 * i + 1, sink);
        }
        for a in 0..d {
            if x[a] < cylinder.hi[a] {
                let j = i + st[a];
                if good(&points[j]) {
                    add(&mut net, 2 * i + 1, 2 * j);
                    add(&mut net, 2 * j + 1, 2 * i);
                }
            }
        }
    }
    let total = net.max_flow(source, sink);
    let mut left: Vec<i64> = arcs.iter().map(|&(_, _, id)| net.flow(id)).collect();
    let mut out_arcs: Vec<Vec<usize>> = vec![Vec::new(); 2 * n + 2];
    for (k, &(u, _, _)) in arcs.iter().enumerate() {
        out_arcs[u].push(k);
    }
    let mut paths = Vec::new();
    for _ in 0..total {
        let mut path = Vec::new();
        let mut v = source;
        while v != sink {
            let k = *out_arcs[v]
                .iter()
                .find(|&&k| left[k] > 0)
                .expect("flow conservation in block network");
            left[k] -= 1;
            v = arcs[k].1;
            if v < 2 * n && v % 2 == 0 {
                path.push(points[v / 2].clone());
            }
        }
        paths.push(path);
    }
    BlockPathPacking { paths }
}

/// [`count_good_block_paths`] with `X_K` taken from a block process.
pub fn count_block_disjoint_paths(
    bp: &BlockProcess,
    cylinder: &VertexBox,
) -> Result<BlockPathPacking, RenormError> {
    if !bp.domain.contains_box(cylinder) {
        return Err(RenormError::Coverage {
            lo: cylinder.lo.clone(),
            hi: cylinder.hi.clone(),
        });
    }
    Ok(count_good_block_paths(cylinder, |x| {
        bp.good(x) == Some(true)
    }))
}

/// Exhaustive maximum of vertex-disjoint good-block paths, for cylinders of
/// at most 64 blocks.
pub fn brute_force_block_packing(
    cylinder: &VertexBox,
    good: impl Fn(&[i64]) -> bool,
) -> Option<usize> {
    let points: Vec<Vec<i64>> = cylinder.points().collect();
    if points.len() > 64 {
        return None;
    }
    let d = cylinder.dim();
    let (bottom, top) = (cylinder.lo[d - 1], cylinder.hi[d - 1]);
    let ok: Vec<bool> = points.iter().map(|x| good(x)).collect();
    let neighbours = |i: usize| -> Vec<usize> {
        (0..points.len())
            .filter(|&j| {
                points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b).abs())
                    .sum::<i64>()
                    == 1
            })
            .collect()
    };
    let adj: Vec<Vec<usize>> = (0..points.len()).map(neighbours).collect();
    let mut masks = Vec::new();
    fn walk(
        i: usize,
        used: u64,
        adj: &[Vec<usize>],
        ok: &[bool],
        points: &[Vec<i64>],
        (bottom, top): (i64, i64),
        out: &mut Vec<u64>,
    ) {
        let d = points[i].len();
        if points[i][d - 1] == top {
            out.push(used);
            return;
        }
        for &j in &adj[i] {
            if ok[j] && used >> j & 1 == 0 && points[j][d - 1] != bottom {
                walk(j, used | 1 << j, adj, ok, points, (bottom, top), out);
            }
        }
    }
    for (i, x) in points.iter().enumerate() {
        if ok[i] && x[d - 1] == bottom {
            walk(i, 1 << i, &adj, &ok, &points, (bottom, top), &mut masks);
        }
    }
    masks.sort_unstable();
    masks.dedup();
    Some(max_disjoint_packing(&masks))
}

/// The instance behind a failed path construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub k: u32,
    pub cylinder: VertexBox,
    pub block_path: Vec<Vec<i64>>,
    pub bounds: VertexBox,
    /// Capacities in the edge order of the graph on `bounds`.
    pub field: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CrossingOutcome {
    /// Vertices of an open path from the bottom to the top of the block
    /// union of the cylinder, inside the blocks of the path.
    Found {
        path: Vec<Vec<i64>>,
    },
    Counterexample(Box<Counterexample>),
}

fn precondition(msg: String) -> RenormError {
    RenormError::Precondition(msg)
}

/// Searches for an open path crossing the block union of `cylinder` using
/// only edges inside the blocks of `block_path`, a chain of good blocks from
/// the bottom block layer to the top one.
///
/// Good blocks guarantee such a path only when `K >= 6`: below that the part
/// of a crossing cluster lying in a half-shifted box can be shorter than
/// `ceil(K/3)`, and the uniqueness event no longer glues neighbouring blocks.
pub fn construct_crossing_path(
    g: &LatticeGraph,
    field: &CapacityField,
    bp: &BlockProcess,
    cylinder: &VertexBox,
    block_path: &[Vec<i64>],
) -> Result<CrossingOutcome, RenormError> {
    let k = bp.k;
    if k < 6 {
        return Err(precondition(format!(
            "K = {k}; the construction needs K >= 6"
        )));
    }
    let d = cylinder.dim();
    let (first, last) = match (block_path.first(), block_path.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(precondition("empty block path".into())),
    };
    if first[d - 1] != cylinder.lo[d - 1] || last[d - 1] != cylinder.hi[d - 1] {
        return Err(precondition(
            "block path does not join the bottom and top layers".into(),
        ));
    }
    for x in block_path {
        if !cylinder.contains(x) {
            return Err(precondition(format!("block {x:?} outside the cylinder")));
        }
        if bp.good(x) != Some(true) {
            return Err(precondition(format!("block {x:?} is not good")));
        }
    }
    for w in block_path.windows(2) {
        if w[0]
            .iter()
            .zip(&w[1])
            .map(|(a, b)| (a - b).abs())
            .sum::<i64>()
            != 1
        {
            return Err(precondition(format!(
                "blocks {:?} and {:?} are not adjacent",
                w[0], w[1]
            )));
        }
    }
    let outer = block_union(cylinder, k)?;
    if !g.bounds().contains_box(&outer) || field.len() != g.num_edges() {
        return Err(RenormError::Coverage {
            lo: outer.lo,
            hi: outer.hi,
        });
    }

    let mut inside = vec![false; g.num_vertices()];
    for x in block_path {
        for p in block_box(x, k)?.points() {
            inside[g.vertex_at(&p).expect("covered")] = true;
        }
    }
    let (bottom, top) = (outer.lo[d - 1], outer.hi[d - 1]);
    let mut parent = vec![usize::MAX; g.num_vertices()];
    let mut queue = VecDeque::new();
    for v in 0..g.num_vertices() {
        if inside[v] && g.level(v) == bottom {
            parent[v] = v;
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        if g.level(v) == top {
            let mut path = vec![g.coords(v)];
            let mut u = v;
            while parent[u] != u {
                u = parent[u];
                path.push(g.coords(u));
            }
            path.reverse();
            return Ok(CrossingOutcome::Found { path });
        }
        for (e, w) in g.incident(v) {
            if inside[w] && parent[w] == usize::MAX && field.get(e) != 0.0 {
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }
    Ok(CrossingOutcome::Counterexample(Box::new(Counterexample {
        k,
        cylinder: cylinder.clone(),
        block_path: block_path.to_vec(),
        bounds: g.bounds().clone(),
        field: field.values().to_vec(),
    })))
}
