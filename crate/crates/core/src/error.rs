use thiserror::Error;

use crate::ids::{AreaId, ReviewerId};

/// Argument and degenerate-input failures of the pure incentive math and ledger.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("{name} must be a non-negative finite number, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfUnitRange { name: &'static str, value: f64 },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("voter {0} is not a current expert")]
    VoterNotExpert(ReviewerId),
    #[error("unknown area {0}")]
    UnknownArea(AreaId),
    #[error("reviewer {0} is not registered")]
    UnknownReviewer(ReviewerId),
    #[error("reviewer {0} is already registered")]
    AlreadyRegistered(ReviewerId),
    #[error("reviewer id {0} exceeds the supported maximum")]
    IdTooLarge(ReviewerId),
}
