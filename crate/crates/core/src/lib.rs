//! Exact MPE inference in Bayesian networks by search over the
//! context-minimal AND/OR graph, guided by mini-bucket heuristics.
//!
//! The usual pipeline is [`model::parse_uai`], then
//! [`model::BeliefNetwork::apply_evidence`], then [`solver::solve`]. The
//! pieces underneath ([`space::SearchSpace`], [`heuristics`], [`search`])
//! are public for finer control. [`oracle`] holds the exact reference
//! solvers and [`generators`] the synthetic benchmark families.

pub mod bench;
pub mod error;
pub mod generators;
pub mod graph;
pub mod heuristics;
pub mod model;
pub mod oracle;
pub mod search;
pub mod solver;
pub mod space;
pub mod structure;
pub mod table;

pub use error::{Error, Result};
pub use model::{Assignment, BeliefNetwork, Factor};
pub use solver::{solve, Algorithm, SolveConfig};
