//! Dinic's blocking-flow algorithm on a residual network, generic over the
//! capacity arithmetic.

use std::collections::VecDeque;
use std::fmt::Debug;
use std::ops::{Add, Sub};

/// Arithmetic a [`Network`] can run on.
pub trait FlowNum: Copy + PartialOrd + Debug + Add<Output = Self> + Sub<Output = Self> {
    const ZERO: Self;
    /// Capacity of unbounded arcs; must dominate any finite cut.
    fn infinity() -> Self;
}

impl FlowNum for i64 {
    const ZERO: Self = 0;
    fn infinity() -> Self {
        i64::MAX / 4
    }
}

impl FlowNum for i128 {
    const ZERO: Self = 0;
    fn infinity() -> Self {
        i128::MAX / 4
    }
}

impl FlowNum for f64 {
    const ZERO: Self = 0.0;
    fn infinity() -> Self {
        f64::INFINITY
    }
}

fn min<T: FlowNum>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

/// Residual network. Arcs come in pairs `2i`, `2i + 1`; the second is the
/// residual twin of the first.
#[derive(Clone, Debug)]
pub struct Network<T> {
    adj: Vec<Vec<usize>>,
    head: Vec<usize>,
    residual: Vec<T>,
    capacity: Vec<T>,
    // residual amounts at or below this count as saturated
    tolerance: T,
    level: Vec<u32>,
    cursor: Vec<usize>,
}

const UNSEEN: u32 = u32::MAX;

impl<T: FlowNum> Network<T> {
    pub fn new(nodes: usize) -> Self {
        Self::with_tolerance(nodes, T::ZERO)
    }

    pub fn with_tolerance(nodes: usize, tolerance: T) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
            head: Vec::new(),
            residual: Vec::new(),
            capacity: Vec::new(),
            tolerance,
            level: vec![UNSEEN; nodes],
            cursor: vec![0; nodes],
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    fn push_pair(&mut self, u: usize, v: usize, fwd: T, back: T) -> usize {
        let id = self.head.len();
        self.adj[u].push(id);
        self.head.push(v);
        self.residual.push(fwd);
        self.capacity.push(fwd);
        self.adj[v].push(id + 1);
        self.head.push(u);
        self.residual.push(back);
        self.capacity.push(back);
        id
    }

    /// Directed arc `u -> v`. Returns its id.
    pub fn add_arc(&mut self, u: usize, v: usize, cap: T) -> usize {
        self.push_pair(u, v, cap, T::ZERO)
    }

    /// Undirected edge usable up to `cap` in either direction, i.e. the
    /// antiparallel pair `u -> v`, `v -> u` sharing one residual twin.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: T) -> usize {
        self.push_pair(u, v, cap, cap)
    }

    /// Net flow along arc `id` in its stated direction (negative when an
    /// undirected edge carries flow backwards).
    pub fn flow(&self, id: usize) -> T {
        self.capacity[id] - self.residual[id]
    }

    fn open(&self, arc: usize) -> bool {
        self.residual[arc] > self.tolerance
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = UNSEEN);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &arc in &self.adj[u] {
                let v = self.head[arc];
                if self.level[v] == UNSEEN && self.open(arc) {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] != UNSEEN
    }

    fn dfs(&mut self, u: usize, t: usize, limit: T) -> T {
        if u == t {
            return limit;
        }
        while self.cursor[u] < self.adj[u].len() {
            let arc = self.adj[u][self.cursor[u]];
            let v = self.head[arc];
            if self.open(arc) && self.level[v] == self.level[u] + 1 {
                let pushed = self.dfs(v, t, min(limit, self.residual[arc]));
                if pushed > self.tolerance {
                    self.residual[arc] = self.residual[arc] - pushed;
                    self.residual[arc ^ 1] = self.residual[arc ^ 1] + pushed;
                    return pushed;
                }
            }
            self.cursor[u] += 1;
        }
        T::ZERO
    }

    /// Augments from `s` to `t` until no augmenting path is left; returns the
    /// amount added by this call.
    pub fn max_flow(&mut self, s: usize, t: usize) -> T {
        assert_ne!(s, t, "source and sink coincide");
        let mut total = T::ZERO;
        while self.bfs(s, t) {
            self.cursor.iter_mut().for_each(|c| *c = 0);
            loop {
                let pushed = self.dfs(s, t, T::infinity());
                if !(pushed > self.tolerance) {
                    break;
                }
                total = total + pushed;
            }
        }
        total
    }

    /// Nodes reachable from `s` through unsaturated arcs.
    pub fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.num_nodes()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &arc in &self.adj[u] {
                let v = self.head[arc];
                if !seen[v] && self.open(arc) {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}
