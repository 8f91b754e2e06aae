//! Skorokhod embeddings for two-sided Markov chains.
//!
//! [`chain`] holds chain specifications and two-sided sample paths,
//! [`local_time`] the visit-count ledgers and ball encoding, [`embedding`]
//! the feasibility test and the stopping-time solvers, [`transport`] the
//! finite-window transport rules and matching, and [`analysis`] the exact
//! oracles and Monte Carlo estimators built on top of them.

pub mod analysis;
pub mod chain;
pub mod embedding;
pub mod error;
pub mod local_time;
pub mod numeric;
pub mod rng;
pub mod transport;

pub use chain::{ChainKind, ChainSpec, State, Trajectory};
pub use error::{Error, Result};
pub use local_time::TargetMeasure;
pub use numeric::Scalar;
