use thiserror::Error;

use crate::ExpertId;

/// Errors surfaced by the learner, solver and harness layers.
#[derive(Debug, Error)]
pub enum OomdError {
    #[error("horizon must be at least 2 rounds, got {0}")]
    HorizonTooShort(usize),

    #[error("grid size must be at least 1")]
    EmptyGrid,

    #[error("infeasible floor: eps * K * M = {0} must be < 1")]
    InfeasibleFloor(f64),

    #[error("weight matrix entries must be strictly positive (found {value} at ({row}, {col}))")]
    NonPositiveWeight { row: usize, col: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("could not bracket the simplex multiplier after {0} expansions")]
    BracketFailure(usize),

    #[error("solution is not feasible: {0}")]
    Infeasible(String),

    #[error("expert set is empty")]
    EmptyExpertSet,

    #[error("expert {0} was removed earlier and cannot re-enter; assign a fresh id")]
    ReusedExpertId(ExpertId),

    #[error("unknown expert {0}")]
    UnknownExpert(ExpertId),

    #[error("duplicate expert {0}")]
    DuplicateExpert(ExpertId),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("not a probability distribution: {0}")]
    NotADistribution(String),

    #[error("protocol violation: {0}")]
    Protocol(&'static str),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed stream file at line {line}: {msg}")]
    StreamFormat { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, OomdError>;
