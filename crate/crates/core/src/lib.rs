//! Maximal flows through cylinders of `Z^d` with i.i.d. edge capacities.
//!
//! The crate is split along the lines of the computation:
//!
//! * [`lattice`] builds the box `B(k, m)`, its faces, plaquettes and the
//!   separation predicates used to talk about cuts.
//! * [`capacity`] holds capacity distributions, the counter-based per-edge
//!   sampler and the truncation of a general field to a 0/1 field.
//! * [`flow`] computes the maximal flow, a canonical minimal cut, packings of
//!   disjoint open paths and validates streams; [`flow::oracle`] holds the
//!   exhaustive checkers.
//! * [`renorm`] is the block coarse-graining: events `U` and `W`, the block
//!   process `X_K`, equivalence classes mod 3 and the good-block path
//!   construction.
//! * [`estimate`] runs the Monte Carlo estimation of the lower-deviation
//!   probability and evaluates the closed-form bounds.

pub mod capacity;
pub mod estimate;
pub mod flow;
pub mod lattice;
pub mod renorm;
pub mod stats;
mod union_find;

pub use union_find::UnionFind;
