//! Medium access control for a shared message.
//!
//! A random subset of `N` sensors observes the same event and must deliver
//! one message over `M` collision channels without coordinating. A slot
//! succeeds when at least one channel carries exactly one transmission.
//!
//! * [`model`]: moves, active sets, activation distributions, strategies,
//!   the success predicate and exact / sampled evaluation.
//! * [`activation`]: the deterministic, regular and general scenario
//!   families, sampling, and the PMF text format.
//! * [`exact`]: exhaustive search for the optimal deterministic strategy.
//! * [`graph`]: conflict graph and coloring view for pairwise activation.
//! * [`cluster`]: divisive clustering and the greedy sequential heuristic.
//! * [`bandit`]: per-sensor bandits trained with round-robin exploration
//!   from the shared acknowledgment.

pub mod activation;
pub mod bandit;
pub mod cluster;
mod error;
pub mod exact;
pub mod graph;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
