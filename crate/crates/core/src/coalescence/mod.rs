//! Independent walkers and the particle processes derived from them.
//!
//! A [`WalkerEnsemble`] holds `n` independent trajectories of one generator. The
//! coalescing, killing and allowed-killings processes are deterministic functions of
//! an ensemble, so all three can be compared on the same randomness.
//!
//! Walkers are indexed from 0 here; walker 0 plays the role of the lowest-labelled
//! walker that never dies.

mod derive;
mod ensemble;
mod estimate;
mod schedule;

pub use derive::{derive_allowed, derive_coalescing, derive_killed, DerivedProcess, ProcessKind};
pub use ensemble::{extend_ensemble, sample_ensemble, WalkerEnsemble};
pub use estimate::{estimate_coalescence, CoalescenceEstimate, EstimateOptions, ReplicaOutcome};
pub use schedule::{build_epoch_schedule, EpochSchedule, KillSchedule, UniformSchedule};
