//! Satellite sub-constellation assignment as a weighted k-clique problem.
//!
//! Groups of satellites are vertices of an implicit graph whose edges join
//! disjoint groups; `k` mutually adjacent vertices covering every satellite
//! form a partition. The problem is encoded as a QUBO, sampled with simulated
//! annealing and repaired into a legal partition.

pub mod anneal;
pub mod cli;
pub mod error;
pub mod oracle;
pub mod pipeline;
pub mod preprocess;
pub mod problem;
pub mod qubo;
pub mod repair;
pub mod sweep;

pub use error::{Error, Result};
pub use problem::{Partition, ProblemInstance, SatSet, Vertex};
