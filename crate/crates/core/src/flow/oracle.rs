//! Exhaustive oracles for small instances. They work from the definitions
//! (separating sets, disjoint open paths) and share no code with the solver.

use serde::Serialize;
use thiserror::Error;

use super::exact::{Dyadic, ScaledCapacities};
use crate::capacity::CapacityField;
use crate::lattice::{EdgeSet, LatticeGraph};

/// Largest instance [`brute_force_min_cut`] accepts.
pub const MAX_CUT_EDGES: usize = 25;
/// Largest instance [`brute_force_path_packing`] accepts.
pub const MAX_PACKING_EDGES: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance has {size} edges; the exhaustive oracle accepts at most {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("field has {field} values for {edges} edges")]
    SizeMismatch { field: usize, edges: usize },
    #[error("edge {edge} has capacity {value}; a 0/1 field is required")]
    NotBinary { edge: usize, value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BruteForceCut {
    pub value: f64,
    pub exact: Option<Dyadic>,
    /// A separating set attaining the minimum.
    pub edges: EdgeSet,
}

fn check(g: &LatticeGraph, field: &CapacityField, limit: usize) -> Result<(), OracleError> {
    if g.num_edges() > limit {
        return Err(OracleError::TooLarge {
            size: g.num_edges(),
            limit,
        });
    }
    if field.len() != g.num_edges() {
        return Err(OracleError::SizeMismatch {
            field: field.len(),
            edges: g.num_edges(),
        });
    }
    Ok(())
}

/// Plain adjacency search over the edges in `kept`.
fn connects(g: &LatticeGraph, kept: u64) -> bool {
    let mut seen = vec![false; g.num_vertices()];
    let mut stack: Vec<usize> = g.bottom().to_vec();
    for &v in &stack {
        seen[v] = true;
    }
    while let Some(v) = stack.pop() {
        if g.is_top(v) {
            return true;
        }
        for (e, w) in g.incident(v) {
            if kept >> e & 1 == 1 && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

struct CutSearch<'a> {
    g: &'a LatticeGraph,
    weights: Vec<i128>,
    // edges in decision order
    order: Vec<usize>,
    best: i128,
    best_set: u64,
}

impl CutSearch<'_> {
    // `kept` are edges declared not in the set, `removed` the others decided so far
    fn go(&mut self, i: usize, kept: u64, removed: u64, value: i128) {
        if value >= self.best || connects(self.g, kept) {
            return;
        }
        if i == self.order.len() {
            self.best = value;
            self.best_set = removed;
            return;
        }
        let e = self.order[i];
        self.go(i + 1, kept | 1 << e, removed, value);
        self.go(i + 1, kept, removed | 1 << e, value + self.weights[e]);
    }
}

/// Minimum of `V(E)` over every set `E` separating `F_0` from `F_m`, by
/// branch and bound over keep/remove decisions per edge.
pub fn brute_force_min_cut(
    g: &LatticeGraph,
    field: &CapacityField,
) -> Result<BruteForceCut, OracleError> {
    check(g, field, MAX_CUT_EDGES)?;
    let scaled = ScaledCapacities::from_values(field.values());
    // no common dyadic scale: fall back to a fine fixed-point grid
    let weights: Vec<i128> = match &scaled {
        Some(s) => s.scaled.clone(),
        None => field
            .values()
            .iter()
            .map(|&v| (v * 2f64.powi(80)) as i128)
            .collect(),
    };
    let mut order: Vec<usize> = (0..g.num_edges()).collect();
    // expensive edges first so that keeping them early finds cheap sets fast
    order.sort_by(|&a, &b| weights[b].cmp(&weights[a]).then(a.cmp(&b)));
    let all: u64 = if g.num_edges() == 64 {
        u64::MAX
    } else {
        (1u64 << g.num_edges()) - 1
    };
    let mut search = CutSearch {
        g,
        best: weights.iter().sum::<i128>() + 1,
        best_set: all,
        weights,
        order,
    };
    search.go(0, 0, 0, 0);
    let edges: EdgeSet = (0..g.num_edges())
        .filter(|e| search.best_set >> e & 1 == 1)
        .collect();
    let (value, exact) = match &scaled {
        Some(s) => {
            let q = s.dyadic(search.best);
            (q.to_f64(), Some(q))
        }
        None => (edges.value(field.values()), None),
    };
    Ok(BruteForceCut {
        value,
        exact,
        edges,
    })
}

fn open_mask(g: &LatticeGraph, field: &CapacityField) -> Result<u64, OracleError> {
    let mut open = 0u64;
    for e in 0..g.num_edges() {
        match field.get(e) {
            v if v == 1.0 => open |= 1 << e,
            v if v == 0.0 => {}
            value => return Err(OracleError::NotBinary { edge: e, value }),
        }
    }
    Ok(open)
}

/// Every simple open path that meets `F_0` only at its start and `F_m` only
/// at its end, as an edge mask. Any open crossing path contains one of these.
pub fn enumerate_open_paths(
    g: &LatticeGraph,
    field: &CapacityField,
) -> Result<Vec<u64>, OracleError> {
    check(g, field, MAX_PACKING_EDGES)?;
    let open = open_mask(g, field)?;
    let mut out = Vec::new();
    let mut on_path = vec![false; g.num_vertices()];
    fn walk(
        g: &LatticeGraph,
        open: u64,
        v: usize,
        used: u64,
        on_path: &mut [bool],
        out: &mut Vec<u64>,
    ) {
        for (e, w) in g.incident(v) {
            if open >> e & 1 == 0 || on_path[w] || g.is_bottom(w) {
                continue;
            }
            if g.is_top(w) {
                out.push(used | 1 << e);
                continue;
            }
            on_path[w] = true;
            walk(g, open, w, used | 1 << e, on_path, out);
            on_path[w] = false;
        }
    }
    for &s in g.bottom() {
        if g.is_top(s) {
            continue;
        }
        on_path[s] = true;
        walk(g, open, s, 0, &mut on_path, &mut out);
        on_path[s] = false;
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Largest number of pairwise disjoint sets among `sets` (bit masks), by
/// backtracking on the lowest element still coverable.
pub fn max_disjoint_packing(sets: &[u64]) -> usize {
    fn go(sets: &[u64], free: u64, count: usize, best: &mut usize) {
        let usable: Vec<u64> = sets
            .iter()
            .copied()
            .filter(|&s| s != 0 && s & !free == 0)
            .collect();
        if usable.is_empty() {
            *best = (*best).max(count);
            return;
        }
        let covered = usable.iter().fold(0u64, |a, &s| a | s);
        let smallest = usable.iter().map(|s| s.count_ones()).min().unwrap();
        if count + (covered.count_ones() / smallest) as usize <= *best {
            return;
        }
        let pivot = covered.trailing_zeros();
        // either some chosen set holds the pivot element, or none does
        for &s in usable.iter().filter(|&&s| s >> pivot & 1 == 1) {
            go(&usable, free & !s, count + 1, best);
        }
        go(&usable, free & !(1 << pivot), count, best);
    }
    let mut best = 0;
    go(sets, u64::MAX, 0, &mut best);
    best
}

/// Maximal number of edge-disjoint open paths from `F_0` to `F_m`, by
/// exhaustive path enumeration and set packing.
pub fn brute_force_path_packing(
    g: &LatticeGraph,
    field: &CapacityField,
) -> Result<usize, OracleError> {
    Ok(max_disjoint_packing(&enumerate_open_paths(g, field)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_cylinder, is_separating, CylinderSpec};

    fn cyl(k: u32, m: u32) -> LatticeGraph {
        build_cylinder(&CylinderSpec::new(2, vec![k], m).unwrap()).unwrap()
    }

    #[test]
    fn unit_square() {
        let g = cyl(1, 1);
        let ones = CapacityField::constant(4, 1.0);
        let cut = brute_force_min_cut(&g, &ones).unwrap();
        assert_eq!(cut.value, 2.0);
        assert!(is_separating(&cut.edges, &g));
        let zeros = CapacityField::constant(4, 0.0);
        assert_eq!(brute_force_min_cut(&g, &zeros).unwrap().value, 0.0);
        assert_eq!(brute_force_path_packing(&g, &ones).unwrap(), 2);
        assert_eq!(brute_force_path_packing(&g, &zeros).unwrap(), 0);
    }

    #[test]
    fn quarter_capacities_on_a_column() {
        // k=1, m=2: the lower verticals at a quarter cap the flow at 1/2
        let g = cyl(1, 2);
        let mut vals = vec![1.0; g.num_edges()];
        for e in 0..g.num_edges() {
            let edge = g.edge(e);
            if edge.axis == 1 && g.level(edge.lo) == 0 {
                vals[e] = 0.25;
            }
        }
        let cut = brute_force_min_cut(&g, &CapacityField::from_values(vals)).unwrap();
        assert_eq!(cut.value, 0.5);
        assert_eq!(cut.exact, Some(Dyadic::new(1, 1)));
    }

    #[test]
    fn size_caps_are_enforced() {
        let g = cyl(3, 4);
        assert!(g.num_edges() > MAX_CUT_EDGES);
        let f = CapacityField::constant(g.num_edges(), 1.0);
        assert!(matches!(
            brute_force_min_cut(&g, &f),
            Err(OracleError::TooLarge { .. })
        ));
        assert!(matches!(
            brute_force_path_packing(&g, &f),
            Err(OracleError::TooLarge { .. })
        ));
    }

    #[test]
    fn packing_of_masks() {
        assert_eq!(max_disjoint_packing(&[]), 0);
        assert_eq!(max_disjoint_packing(&[0b011, 0b110, 0b100]), 2);
        assert_eq!(max_disjoint_packing(&[0b0111, 0b0001, 0b0010, 0b0100]), 3);
    }
}
