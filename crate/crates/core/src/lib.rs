//! Expertise-based curation of a digital-asset marketplace.
//!
//! Reviewers hold a non-transferable expertise score per area. Experts
//! (the top `k` per area) vote assets onto the listing; everyone may review,
//! predict demand and endorse reviews. After a sale, endorsement gains,
//! investor dividends and prediction rewards move expertise toward reviewers
//! whose judgement matched the market.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`.

pub mod error;
pub mod ids;
pub mod incentives;
pub mod ledger;
pub mod params;
pub mod protocol;
pub mod scalar;

pub use error::CoreError;
pub use ids::{AreaId, AssetId, ReviewerId, RoundId};
pub use ledger::{BurnOutcome, ExpertiseLedger, InvestmentTable, MAX_REVIEWER_ID};
pub use params::{IncentiveParams, Slope};
pub use scalar::Scalar;

pub type Real = f64;
pub type Params = IncentiveParams<Real>;
pub type Ledger = ExpertiseLedger<Real>;
pub type Engine = protocol::Engine<Real>;
pub type Event = protocol::ProtocolEvent<Real>;
pub type Outcome = protocol::RoundOutcome<Real>;
