use thiserror::Error;

use crate::process::StrategyState;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no consensus after {steps} steps")]
    Timeout {
        steps: u64,
        /// State at the moment the cap was hit.
        state: Box<StrategyState>,
    },

    #[error("replications {indices:?} hit the step cap of {step_cap}")]
    ReplicationTimeouts { indices: Vec<usize>, step_cap: u64 },

    #[error("state space of {states} states exceeds the limit of {limit}")]
    Capacity { states: u128, limit: u128 },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
