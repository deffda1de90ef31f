//! Coalescing random walks on finite reversible Markov chains.
//!
//! The crate is organised around a validated [`Generator`]:
//!
//! - [`chain`]: stationary law, transition semigroup, hitting, meeting and mixing times.
//! - [`spectral`]: quasistationary distributions of the chain killed at a state, exact
//!   survival probabilities against a deterministic path, and the eigenvalue limit
//!   used to bound them.
//! - [`coalescence`]: independent walker ensembles and the coalescing, killing and
//!   allowed-killings processes derived from them.
//! - [`voter`]: the voter model and its comparison with coalescence times.
//! - [`experiments`]: the orchestration behind the command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chain;
pub mod coalescence;
mod error;
pub mod experiments;
pub mod graph;
mod numerics;
pub mod path;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod voter;

pub use chain::{ChainAnalytics, Generator, ProbabilityVector};
pub use coalescence::{DerivedProcess, EpochSchedule, WalkerEnsemble};
pub use error::{allow_partial, Error, Result};
pub use graph::Graph;
pub use path::PiecewisePath;
