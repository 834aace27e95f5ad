//! Benchmarking suite for variational quantum circuit-search algorithms on
//! QUBO problem instances.
//!
//! Four algorithms — an evolutionary search ([`evqe`]), a variable-ansatz
//! search with circuit simplification ([`vans`]), a random-growth baseline
//! ([`ra_vqe`]) and fixed-structure QAOA ([`qaoa`]) — are run against
//! generated MaxCut, vertex-cover and number-partitioning instances
//! ([`problems`]) under a shared evaluation-budget protocol ([`opt`]), on an
//! exact dense statevector simulator ([`sim`]). The [`bench`] module
//! orchestrates the experiment matrix and emits result tables; [`hypertune`]
//! searches each algorithm's hyperparameter space.

pub mod circuit;
pub mod error;
pub mod evqe;
pub mod hypertune;
pub mod opt;
pub mod problems;
pub mod qaoa;
pub mod ra_vqe;
pub mod rng;
pub mod sim;
pub mod vans;

pub use error::{Error, Result};
