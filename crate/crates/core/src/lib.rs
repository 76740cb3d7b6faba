//! Benchmarking link predictors under structured edge missingness.
//!
//! A [`missingness`] sampler hides part of a network, the [`predictors`]
//! score candidate node pairs on what stays visible, [`evalpipe`] measures
//! how well those scores recover the hidden edges, and [`analysis`]
//! aggregates the results across networks.

pub mod analysis;
pub mod evalpipe;
pub mod graph;
pub mod linalg;
pub mod missingness;
pub mod predictors;
pub mod seed;

pub use graph::{EdgeSet, Graph, GraphError, NodeId, NodePair};
pub use missingness::{draw_sample, Category, SampleError, SampleOutcome, SamplerKind, SamplerSpec};
