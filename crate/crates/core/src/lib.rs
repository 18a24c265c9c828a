//! Online model selection with optimistic online mirror descent over an
//! expanded (expert x learning rate) simplex, using a geometric grid of
//! learning rates that reaches `Theta(T)` and a penalty-based safeguard that
//! excludes learning rates once their accumulated instability exceeds a
//! threshold.
//!
//! The crate is organized bottom-up:
//!
//! * [`simplex`]: learning-rate grid, weight matrices, the truncated-simplex
//!   mirror-descent solver and Bregman utilities.
//! * [`safeguard`]: penalty ledger, active-set construction, thresholds.
//! * [`learner`]: the per-round protocol for fixed and dynamic expert pools.
//! * [`optimism`]: loss predictors fed to the optimistic step.
//! * [`clip`]: loss clipping with restarts for unknown loss ranges.
//! * [`baselines`]: the comparison and ablation variants.
//! * [`env`]: seeded drift streams, the adversarial instance, pool schedules.
//! * [`metrics`]: regret, path length, adaptation lag and per-round records.
//! * [`harness`]: multi-trial experiment runner and CSV output.

pub mod baselines;
pub mod clip;
pub mod env;
pub mod error;
pub mod harness;
pub mod learner;
pub mod metrics;
pub mod optimism;
pub mod safeguard;
pub mod simplex;

pub use error::{OomdError, Result};
pub use simplex::{ActiveSet, LearningRateGrid, OmdProblem, WeightMatrix};

use std::fmt;

/// Stable identifier of an expert. Identifiers are never reused within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct ExpertId(pub u64);

impl fmt::Display for ExpertId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}
