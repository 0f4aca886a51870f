use alloc::string::String;
use alloc::vec::Vec;

/// Errors produced by model construction, the solvers and the simulator.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// One or more violations found while validating a model description.
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("{what}: expected length {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    /// The regularized solver was called with a non-positive regularizer
    /// weight, or the unregularized one with a positive weight.
    #[error("wrong solver for eta = {eta}")]
    WrongSolver { eta: f64 },

    #[error("prices diverged at iteration {iteration}: norm {norm:e} exceeds {limit:e}")]
    Divergence {
        iteration: u64,
        norm: f64,
        limit: f64,
    },

    /// A channel could not carry its requested flow even after being reset
    /// to half capacity.
    #[error("channel {channel} infeasible after rebalancing at slot {slot}")]
    CapacityViolation { slot: u64, channel: usize },

    #[error("instance too large for the primal oracle: {paths} paths (limit {limit})")]
    OracleTooLarge { paths: usize, limit: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
