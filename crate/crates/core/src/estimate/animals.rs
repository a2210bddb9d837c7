//! Counting rooted lattice animals: diamond-connected edge sets containing a
//! fixed vertical edge, and L1-connected vertex sets containing the origin.

use std::collections::{BTreeSet, HashSet};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::EstimateError;
use crate::lattice::{diamond_neighbors, LatticeEdge};

/// Counts of rooted animals of every size up to `max_size`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnimalCounts {
    pub d: usize,
    /// `counts[s - 1]` animals of size `s`.
    pub counts: Vec<u64>,
}

impl AnimalCounts {
    pub fn count(&self, s: usize) -> u64 {
        self.counts[s - 1]
    }

    /// `count(s)^(1/s)`, a lower estimate of the growth constant.
    pub fn growth(&self, s: usize) -> f64 {
        (self.count(s) as f64).powf(1.0 / s as f64)
    }

    pub fn max_size(&self) -> usize {
        self.counts.len()
    }
}

/// Redelmeier's enumeration: every connected set of at most `max_size`
/// elements containing `root`, each produced exactly once.
fn redelmeier<T, F>(root: T, max_size: usize, neighbours: F) -> Vec<u64>
where
    T: Clone + Eq + Hash,
    F: Fn(&T) -> Vec<T>,
{
    fn grow<T: Clone + Eq + Hash, F: Fn(&T) -> Vec<T>>(
        untried: &mut Vec<T>,
        seen: &mut HashSet<T>,
        size: usize,
        max_size: usize,
        counts: &mut [u64],
        neighbours: &F,
    ) {
        while let Some(cell) = untried.pop() {
            counts[size] += 1;
            if size + 1 < max_size {
                let mut added = Vec::new();
                let mut next = untried.clone();
                for nb in neighbours(&cell) {
                    if seen.insert(nb.clone()) {
                        added.push(nb.clone());
                        next.push(nb);
                    }
                }
                grow(&mut next, seen, size + 1, max_size, counts, neighbours);
                for nb in added {
                    seen.remove(&nb);
                }
            }
        }
    }
    let mut counts = vec![0u64; max_size];
    let mut seen = HashSet::from([root.clone()]);
    let mut untried = vec![root];
    grow(
        &mut untried,
        &mut seen,
        0,
        max_size,
        &mut counts,
        &neighbours,
    );
    counts
}

/// Largest sizes accepted by [`count_diamond_sets`] for `d = 2, 3`.
pub fn diamond_size_cap(d: usize) -> Option<usize> {
    match d {
        2 => Some(6),
        3 => Some(4),
        _ => None,
    }
}

/// The fixed edge `e_0`: the vertical edge from the origin.
pub fn root_edge(d: usize) -> LatticeEdge {
    LatticeEdge::new(vec![0; d], d - 1)
}

/// Diamond-connected edge sets of each size up to `s` containing `e_0`.
pub fn count_diamond_sets(s: usize, d: usize) -> Result<AnimalCounts, EstimateError> {
    let cap = diamond_size_cap(d).ok_or_else(|| {
        EstimateError::Invalid(vec![format!("d = {d}: only d = 2, 3 are supported")])
    })?;
    if s == 0 || s > cap {
        return Err(EstimateError::SizeCap { size: s, cap });
    }
    Ok(AnimalCounts {
        d,
        counts: redelmeier(root_edge(d), s, diamond_neighbors),
    })
}

/// Largest sizes accepted by [`count_vertex_animals`] for `d = 2, 3`.
pub fn vertex_size_cap(d: usize) -> Option<usize> {
    match d {
        2 => Some(10),
        3 => Some(7),
        _ => None,
    }
}

/// L1-connected vertex sets of each size up to `s` containing the origin.
pub fn count_vertex_animals(s: usize, d: usize) -> Result<AnimalCounts, EstimateError> {
    let cap = vertex_size_cap(d).ok_or_else(|| {
        EstimateError::Invalid(vec![format!("d = {d}: only d = 2, 3 are supported")])
    })?;
    if s == 0 || s > cap {
        return Err(EstimateError::SizeCap { size: s, cap });
    }
    let neighbours = |x: &Vec<i64>| {
        let mut out = Vec::with_capacity(2 * x.len());
        for a in 0..x.len() {
            for step in [1, -1] {
                let mut y = x.clone();
                y[a] += step;
                out.push(y);
            }
        }
        out
    };
    Ok(AnimalCounts {
        d,
        counts: redelmeier(vec![0i64; d], s, neighbours),
    })
}

/// Slow cross-check: grow sets one element at a time, deduplicating by their
/// sorted form.
pub fn count_by_canonical_growth<T, F>(root: T, max_size: usize, neighbours: F) -> Vec<u64>
where
    T: Clone + Ord,
    F: Fn(&T) -> Vec<T>,
{
    let mut layer: BTreeSet<Vec<T>> = BTreeSet::from([vec![root]]);
    let mut counts = vec![layer.len() as u64];
    for _ in 1..max_size {
        let mut next = BTreeSet::new();
        for set in &layer {
            for cell in set {
                for nb in neighbours(cell) {
                    if set.binary_search(&nb).is_err() {
                        let mut grown = set.clone();
                        grown.push(nb);
                        grown.sort();
                        next.insert(grown);
                    }
                }
            }
        }
        counts.push(next.len() as u64);
        layer = next;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_diamond_counts() {
        let c2 = count_diamond_sets(3, 2).unwrap();
        assert_eq!(c2.count(1), 1);
        assert_eq!(c2.count(2), 6);
        assert!(c2.count(3) <= c2.count(2) * 12);
        assert_eq!(count_diamond_sets(1, 3).unwrap().count(1), 1);
        assert_eq!(count_diamond_sets(2, 3).unwrap().count(2), 32);
        assert!(matches!(
            count_diamond_sets(7, 2),
            Err(EstimateError::SizeCap { .. })
        ));
        assert!(matches!(
            count_diamond_sets(5, 3),
            Err(EstimateError::SizeCap { .. })
        ));
    }

    #[test]
    fn redelmeier_matches_canonical_growth() {
        let fast = count_diamond_sets(5, 2).unwrap().counts;
        let slow = count_by_canonical_growth(root_edge(2), 5, diamond_neighbors);
        assert_eq!(fast, slow);
        let fast = count_diamond_sets(3, 3).unwrap().counts;
        let slow = count_by_canonical_growth(root_edge(3), 3, diamond_neighbors);
        assert_eq!(fast, slow);
    }

    #[test]
    fn vertex_animals_known_values() {
        // fixed polyominoes counted by cells containing the origin: s * A001168(s)
        let a = count_vertex_animals(5, 2).unwrap();
        assert_eq!(a.counts, vec![1, 2 * 2, 3 * 6, 4 * 19, 5 * 63]);
    }
}
