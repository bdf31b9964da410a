//! Per-asset round state machine and its audit log.

mod engine;
pub mod event;
mod replay;
mod round;
mod tokens;

pub use engine::{AdmissionDecision, AreaSettlement, Engine, ProtocolError, RoundOutcome};
pub use event::{
    verify_events, verify_reader, Digest, EventBody, EventKind, EventLog, EventSink, GainSource,
    LogReader, ProtocolEvent, VerifyError,
};
pub use replay::{replay, replay_events, ReplayError};
pub use round::{listing_order, AssetRecord, AssetState, RoundState};
pub use tokens::TokenLedger;
