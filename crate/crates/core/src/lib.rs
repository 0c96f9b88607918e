//! Benchmark engine for graph-traversal agents.
//!
//! Generates non-semantic property graphs and grid mazes, exposes a minimal
//! traversal toolset to pluggable agents, computes exact ground truth for
//! twelve query templates and scores agent transcripts.

pub mod agent;
pub mod benchmark;
pub mod evaluation;
pub mod generator;
pub mod graph;
pub mod maze;
pub mod scalar;
pub mod seed;
pub mod suite;
pub mod tools;

pub use graph::{NodeId, PropertyGraph, PropertyValue, RelId, Schema, SchemaTable};
