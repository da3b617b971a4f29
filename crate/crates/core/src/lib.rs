//! Deterministic round-synchronous simulator of the CONGEST_B model with
//! bandwidth-parametric distributed graph algorithms.

pub mod apsp;
pub mod distk;
pub mod engine;
pub mod graph;
pub mod mst;
pub mod sssp;
pub mod sweep;
pub mod unionfind;
