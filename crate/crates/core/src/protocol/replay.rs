//! Re-executes a recorded log on a fresh engine.
//!
//! Input events (registrations, bootstrap, submissions, votes, sales,
//! burns) are fed back as operations; every event the engine emits in
//! response must hash-equal the recorded one at the same position. Since
//! the hashes commit to every derived value, a successful replay ends in a
//! bit-identical ledger.

use std::collections::VecDeque;

use thiserror::Error;

use crate::ids::RoundId;
use crate::scalar::Scalar;

use super::engine::{Engine, ProtocolError};
use super::event::{
    ChainVerifier, EventBody, EventSink, GainSource, ProtocolEvent, VerifyError,
};
use super::round::AssetRecord;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Corrupt(#[from] VerifyError),
    #[error("log is empty")]
    Empty,
    #[error("event {0}: log must start with engine initialization")]
    MissingInit(u64),
    #[error("event {index}: {kind:?} is derived and not preceded by its cause")]
    UnexpectedDerived { index: u64, kind: super::event::EventKind },
    #[error("event {index}: missing round id")]
    MissingRound { index: u64 },
    #[error("event {index}: operation failed on replay: {source}")]
    Rejected { index: u64, source: ProtocolError },
    #[error("event {index}: replay produced a different event")]
    Diverged { index: u64 },
    #[error("log ends before the events of its last operation")]
    Truncated,
}

fn need_round(index: u64, round: Option<RoundId>) -> Result<RoundId, ReplayError> {
    round.ok_or(ReplayError::MissingRound { index })
}

fn pairs<T: Copy>(entries: &[super::event::Entry<T>]) -> Vec<(crate::ids::ReviewerId, T)> {
    entries.iter().map(|e| (e.0, e.1)).collect()
}

fn apply<T: Scalar>(engine: &mut Engine<T>, ev: &ProtocolEvent<T>) -> Result<(), ReplayError> {
    let index = ev.seq;
    let rejected = |source| ReplayError::Rejected { index, source };
    let derived = || ReplayError::UnexpectedDerived { index, kind: ev.body.kind() };
    match &ev.body {
        EventBody::ReviewerRegistered(b) => engine.register_reviewer(b.reviewer).map_err(rejected),
        EventBody::ExpertiseDistributed(b) if b.source == GainSource::Bootstrap => {
            engine.bootstrap_expertise(b.area, &pairs(&b.credits)).map_err(rejected)
        }
        EventBody::ExpertsRotated(_) if ev.round.is_none() => {
            engine.rotate_experts();
            Ok(())
        }
        EventBody::AssetSubmitted(b) => {
            let expected = need_round(index, ev.round)?;
            let id = engine
                .submit_asset(AssetRecord::new(b.asset, b.areas.iter().copied(), b.entry_fee))
                .map_err(rejected)?;
            if id != expected {
                return Err(ReplayError::Diverged { index });
            }
            Ok(())
        }
        EventBody::RatingRecorded(b) => {
            engine.record_ratings(need_round(index, ev.round)?, &pairs(&b.entries)).map_err(rejected)
        }
        EventBody::AdmissionDecided(_) => {
            engine.finalize_admission(need_round(index, ev.round)?).map(|_| ()).map_err(rejected)
        }
        EventBody::ReviewRecorded(b) => {
            engine.record_reviews(need_round(index, ev.round)?, &pairs(&b.entries)).map_err(rejected)
        }
        EventBody::PredictionRecorded(b) => engine
            .record_predictions(need_round(index, ev.round)?, &pairs(&b.entries))
            .map_err(rejected),
        EventBody::EndorsementRecorded(b) => engine
            .record_endorsements(need_round(index, ev.round)?, &b.entries)
            .map_err(rejected),
        EventBody::SaleObserved(b) => {
            engine.settle_round(need_round(index, ev.round)?, b.demand).map(|_| ()).map_err(rejected)
        }
        EventBody::ExpertiseBurned(b) => {
            engine.burn_expertise(b.target, &b.votes, b.area).map(|_| ()).map_err(rejected)
        }
        EventBody::EngineInitialized(_)
        | EventBody::ExpertiseDistributed(_)
        | EventBody::ExpertsRotated(_)
        | EventBody::FeeForfeited(_)
        | EventBody::IncentivePaid(_) => Err(derived()),
    }
}

/// Replays a recorded log, returning the reconstructed engine. The chain
/// itself is verified along the way.
pub fn replay<T: Scalar>(
    events: impl IntoIterator<Item = Result<ProtocolEvent<T>, VerifyError>>,
) -> Result<Engine<T>, ReplayError> {
    let mut chain = ChainVerifier::default();
    let mut events = events.into_iter();
    let first = events.next().ok_or(ReplayError::Empty)??;
    chain.check(&first)?;
    let EventBody::EngineInitialized(init) = &first.body else {
        return Err(ReplayError::MissingInit(first.seq));
    };
    let mut engine = Engine::new(init.params, init.areas.iter().copied(), EventSink::memory())
        .map_err(|source| ReplayError::Rejected { index: 0, source })?;
    let mut pending: VecDeque<ProtocolEvent<T>> = engine.log_mut().drain().into();

    for ev in std::iter::once(Ok(first)).chain(events) {
        let ev = ev?;
        if ev.seq != 0 {
            chain.check(&ev)?;
        }
        if pending.is_empty() {
            apply(&mut engine, &ev)?;
            pending.extend(engine.log_mut().drain());
        }
        let produced = pending.pop_front().ok_or(ReplayError::Diverged { index: ev.seq })?;
        if produced.hash != ev.hash {
            return Err(ReplayError::Diverged { index: ev.seq });
        }
    }
    if !pending.is_empty() {
        return Err(ReplayError::Truncated);
    }
    Ok(engine)
}

/// Replays an in-memory log.
pub fn replay_events<T: Scalar>(events: &[ProtocolEvent<T>]) -> Result<Engine<T>, ReplayError> {
    replay(events.iter().cloned().map(Ok))
}
