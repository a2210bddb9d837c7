use serde::Serialize;

use super::{count_components, LatticeEdge, LatticeError};

/// The closed unit `(d-1)`-cube crossing an edge at its midpoint,
/// orthogonal to it.
///
/// Coordinates are stored doubled so that half-integers stay exact: on the
/// normal axis the plaquette is the single value `center2[normal]`, on every
/// other axis it spans `center2[i] - 1 ..= center2[i] + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Plaquette {
    pub center2: Vec<i64>,
    /// Zero-based axis the edge runs along.
    pub normal: usize,
}

impl Plaquette {
    pub fn of(e: &LatticeEdge) -> Self {
        let mut center2: Vec<i64> = e.base.iter().map(|c| 2 * c).collect();
        center2[e.axis] += 1;
        Self {
            center2,
            normal: e.axis,
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.center2.iter().map(|&c| c as f64 / 2.0).collect()
    }

    /// Doubled-coordinate interval covered on `axis`.
    pub fn span2(&self, axis: usize) -> (i64, i64) {
        let c = self.center2[axis];
        if axis == self.normal {
            (c, c)
        } else {
            (c - 1, c + 1)
        }
    }

    pub fn intersects(&self, other: &Plaquette) -> bool {
        (0..self.center2.len()).all(|a| {
            let (l1, h1) = self.span2(a);
            let (l2, h2) = other.span2(a);
            l1.max(l2) <= h1.min(h2)
        })
    }
}

/// `e1` and `e2` are diamond-connected: their plaquettes meet.
pub fn diamond_adjacent(e1: &LatticeEdge, e2: &LatticeEdge) -> bool {
    e1.plaquette().intersects(&e2.plaquette())
}

/// All edges of `Z^d` other than `e` whose plaquette meets that of `e`,
/// in lexicographic order.
pub fn diamond_neighbors(e: &LatticeEdge) -> Vec<LatticeEdge> {
    let d = e.base.len();
    let p = e.plaquette();
    let mut out = Vec::new();
    let mut offset = vec![-2i64; d];
    loop {
        let base: Vec<i64> = e.base.iter().zip(&offset).map(|(b, o)| b + o).collect();
        for axis in 0..d {
            let cand = LatticeEdge::new(base.clone(), axis);
            if &cand != e && p.intersects(&cand.plaquette()) {
                out.push(cand);
            }
        }
        let mut a = d;
        loop {
            if a == 0 {
                out.sort();
                return out;
            }
            a -= 1;
            if offset[a] < 2 {
                offset[a] += 1;
                break;
            }
            offset[a] = -2;
        }
    }
}

/// Connectivity of a list of `Z^d` edges under [`diamond_adjacent`].
pub fn diamond_connected_edges(edges: &[LatticeEdge]) -> Result<bool, LatticeError> {
    if edges.is_empty() {
        return Err(LatticeError::EmptyEdgeSet);
    }
    let plaquettes: Vec<Plaquette> = edges.iter().map(LatticeEdge::plaquette).collect();
    Ok(count_components(&plaquettes, |a, b| a.intersects(b)) == 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(x: &[i64], y: &[i64]) -> LatticeEdge {
        LatticeEdge::between(x, y).unwrap()
    }

    #[test]
    fn plaquette_of_vertical_edge() {
        let p = edge(&[0, 0], &[0, 1]).plaquette();
        assert_eq!(p.center(), vec![0.0, 0.5]);
        assert_eq!(p.normal, 1);
        assert_eq!(p.span2(0), (-1, 1));
        assert_eq!(p.span2(1), (1, 1));

        let q = edge(&[3, 4], &[4, 4]).plaquette();
        assert_eq!(q.center(), vec![3.5, 4.0]);
        assert_eq!(q.normal, 0);

        let r = edge(&[0, 0, 0], &[0, 0, 1]).plaquette();
        assert_eq!(r.span2(0), (-1, 1));
        assert_eq!(r.span2(1), (-1, 1));
        assert_eq!(r.span2(2), (1, 1));
    }

    #[test]
    fn adjacency_examples() {
        let a = edge(&[0, 0], &[0, 1]);
        let b = edge(&[1, 0], &[1, 1]);
        assert!(diamond_adjacent(&a, &a));
        assert!(diamond_adjacent(&a, &b));
        let far = edge(&[3, 0], &[3, 1]);
        assert!(!diamond_adjacent(&a, &far));
        assert_eq!(diamond_connected_edges(&[a.clone(), b]), Ok(true));
        assert_eq!(diamond_connected_edges(&[a.clone(), far]), Ok(false));
        assert_eq!(diamond_connected_edges(&[a]), Ok(true));
    }

    /// Independent count: every edge whose midpoint is within max-distance 2,
    /// tested with rational interval arithmetic on the actual plaquette corners.
    fn neighbourhood_by_midpoints(e: &LatticeEdge) -> usize {
        let d = e.base.len();
        let mid = |f: &LatticeEdge| -> Vec<f64> {
            let mut m: Vec<f64> = f.base.iter().map(|&c| c as f64).collect();
            m[f.axis] += 0.5;
            m
        };
        let m0 = mid(e);
        let mut count = 0;
        for dx in -3i64..=3 {
            for dy in -3i64..=3 {
                for axis in 0..d {
                    let base = vec![e.base[0] + dx, e.base[1] + dy];
                    let f = LatticeEdge::new(base, axis);
                    let m1 = mid(&f);
                    let near = m0.iter().zip(&m1).all(|(a, b)| (a - b).abs() <= 2.0);
                    if f == *e || !near {
                        continue;
                    }
                    let meets = (0..d).all(|i| {
                        let half = |g: &LatticeEdge, m: &[f64]| {
                            if i == g.axis {
                                (m[i], m[i])
                            } else {
                                (m[i] - 0.5, m[i] + 0.5)
                            }
                        };
                        let (l0, h0) = half(e, &m0);
                        let (l1, h1) = half(&f, &m1);
                        l0.max(l1) <= h0.min(h1)
                    });
                    if meets {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    #[test]
    fn six_neighbours_in_two_dimensions() {
        for e in [edge(&[0, 0], &[0, 1]), edge(&[5, -2], &[6, -2])] {
            assert_eq!(diamond_neighbors(&e).len(), 6);
            assert_eq!(neighbourhood_by_midpoints(&e), 6);
        }
    }

    #[test]
    fn neighbours_in_three_dimensions() {
        // 8 surrounding vertical plaquettes, and per horizontal axis
        // 2 (position) x 3 (transverse) x 2 (level) horizontal ones.
        let e = LatticeEdge::new(vec![0, 0, 0], 2);
        let n = diamond_neighbors(&e);
        assert!(n
            .iter()
            .all(|f| diamond_adjacent(&e, f) && diamond_adjacent(f, &e)));
        assert_eq!(n.len(), 8 + 2 * 2 * 3 * 2);
    }
}
