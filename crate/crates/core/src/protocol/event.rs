//! Append-only, SHA-256 hash-chained protocol event log.
//!
//! Each event's hash covers `seq ‖ payload ‖ prev_hash`, where the payload
//! bytes are the canonical encoding of the round id, the event kind and the
//! kind-specific fields (fixed field order, integers big-endian, reals as
//! IEEE-754 bit patterns, sequences length-prefixed with a `u64`). The first
//! event links to an all-zero hash.
//!
//! The text export is one JSON object per line:
//!
//! ```text
//! {"seq":0,"round":null,"kind":"ReviewerRegistered","payload":{"reviewer":7},"prev_hash":"00..00","hash":"9f..c1"}
//! ```
//!
//! Reals inside payloads are written as the lowercase hex of their bit
//! pattern so the text form is exact and every byte of it is significant.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::ids::{AreaId, AssetId, ReviewerId, RoundId};
use crate::params::IncentiveParams;
use crate::scalar::{hexbits, Scalar};

pub type Digest = [u8; 32];

pub const GENESIS_HASH: Digest = [0u8; 32];

/// A reviewer paired with a real value (rating, review, prediction, credit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Entry<T>(pub ReviewerId, #[serde(with = "hexbits")] pub T);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GainSource {
    Bootstrap,
    Endorsement,
    Dividend,
    Prediction,
    PredictionDividend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"), deny_unknown_fields)]
pub struct EngineInit<T> {
    pub areas: Vec<AreaId>,
    pub params: IncentiveParams<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Registration {
    pub reviewer: ReviewerId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"), deny_unknown_fields)]
pub struct Submission<T> {
    pub asset: AssetId,
    pub areas: Vec<AreaId>,
    #[serde(with = "hexbits")]
    pub entry_fee: T,
    /// Frozen expert set assigned to the round.
    pub experts: Vec<ReviewerId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"), deny_unknown_fields)]
pub struct Scores<T> {
    pub asset: AssetId,
    pub entries: Vec<Entry<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"), deny_unknown_fields)]
pub struct Admission<T> {
    pub asset: AssetId,
    #[serde(with = "hexbits")]
    pub rbar: T,
    #[serde(with = "hexbits")]
    pub thresh: T,
    pub admitted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endorsements {
    pub asset: AssetId,
    /// `(endorser, endorsee)` pairs ascending by endorser.
    pub entries: Vec<(ReviewerId, ReviewerId)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"), deny_unknown_fields)]
pub struct Sale<T> {
    pub asset: AssetId,
    #[serde(with = "hexbits")]
    pub demand: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"), deny_unknown_fields)]
pub struct Distribution<T> {
    pub area: AreaId,
    pub source: GainSource,
    /// System-wide prediction error, for prediction payouts.
    #[serde(with = "hexbits::option")]
    pub eps: Option<T>,
    pub credits: Vec<Entry<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rotation {
    pub area: AreaId,
    pub experts: Vec<ReviewerId>,
    pub entered: Vec<ReviewerId>,
    pub left: Vec<ReviewerId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"), deny_unknown_fields)]
pub struct Burn<T> {
    pub target: ReviewerId,
    pub area: AreaId,
    pub votes: Vec<ReviewerId>,
    pub applied: bool,
    #[serde(with = "hexbits")]
    pub burned: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"), deny_unknown_fields)]
pub struct Forfeit<T> {
    pub asset: AssetId,
    #[serde(with = "hexbits")]
    pub amount: T,
    #[serde(with = "hexbits")]
    pub pool_after: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"), deny_unknown_fields)]
pub struct Payout<T> {
    pub asset: AssetId,
    pub payments: Vec<Entry<T>>,
    #[serde(with = "hexbits")]
    pub pool_after: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    EngineInitialized,
    ReviewerRegistered,
    AssetSubmitted,
    RatingRecorded,
    AdmissionDecided,
    ReviewRecorded,
    PredictionRecorded,
    EndorsementRecorded,
    SaleObserved,
    ExpertiseDistributed,
    ExpertsRotated,
    ExpertiseBurned,
    FeeForfeited,
    IncentivePaid,
}

impl EventKind {
    fn tag(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventBody<T> {
    EngineInitialized(EngineInit<T>),
    ReviewerRegistered(Registration),
    AssetSubmitted(Submission<T>),
    RatingRecorded(Scores<T>),
    AdmissionDecided(Admission<T>),
    ReviewRecorded(Scores<T>),
    PredictionRecorded(Scores<T>),
    EndorsementRecorded(Endorsements),
    SaleObserved(Sale<T>),
    ExpertiseDistributed(Distribution<T>),
    ExpertsRotated(Rotation),
    ExpertiseBurned(Burn<T>),
    FeeForfeited(Forfeit<T>),
    IncentivePaid(Payout<T>),
}

struct Enc<'a>(&'a mut Vec<u8>);

impl Enc<'_> {
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn flag(&mut self, v: bool) {
        self.0.push(v as u8);
    }
    fn real<T: Scalar>(&mut self, v: T) {
        v.write_be(self.0);
    }
    fn len(&mut self, n: usize) {
        self.u64(n as u64);
    }
    fn reviewers(&mut self, ids: &[ReviewerId]) {
        self.len(ids.len());
        for id in ids {
            self.u32(id.0);
        }
    }
    fn entries<T: Scalar>(&mut self, entries: &[Entry<T>]) {
        self.len(entries.len());
        for e in entries {
            self.u32(e.0 .0);
            self.real(e.1);
        }
    }
}

impl<T: Scalar> EventBody<T> {
    pub fn kind(&self) -> EventKind {
        match self {
            EventBody::EngineInitialized(_) => EventKind::EngineInitialized,
            EventBody::ReviewerRegistered(_) => EventKind::ReviewerRegistered,
            EventBody::AssetSubmitted(_) => EventKind::AssetSubmitted,
            EventBody::RatingRecorded(_) => EventKind::RatingRecorded,
            EventBody::AdmissionDecided(_) => EventKind::AdmissionDecided,
            EventBody::ReviewRecorded(_) => EventKind::ReviewRecorded,
            EventBody::PredictionRecorded(_) => EventKind::PredictionRecorded,
            EventBody::EndorsementRecorded(_) => EventKind::EndorsementRecorded,
            EventBody::SaleObserved(_) => EventKind::SaleObserved,
            EventBody::ExpertiseDistributed(_) => EventKind::ExpertiseDistributed,
            EventBody::ExpertsRotated(_) => EventKind::ExpertsRotated,
            EventBody::ExpertiseBurned(_) => EventKind::ExpertiseBurned,
            EventBody::FeeForfeited(_) => EventKind::FeeForfeited,
            EventBody::IncentivePaid(_) => EventKind::IncentivePaid,
        }
    }

    /// Canonical payload bytes (kind tag followed by the fields).
    pub fn encode(&self, out: &mut Vec<u8>) {
        out.push(self.kind().tag());
        let mut e = Enc(out);
        match self {
            EventBody::EngineInitialized(b) => {
                e.len(b.areas.len());
                for a in &b.areas {
                    e.u32(a.0);
                }
                let p = &b.params;
                for v in [p.alpha, p.beta, p.c1, p.c2, p.pool_scale] {
                    e.real(v);
                }
                e.u64(p.k as u64);
                for v in [p.thresh, p.burn_fraction, p.w_endorse, p.w_predict] {
                    e.real(v);
                }
                e.flag(p.broad_dividends);
                e.real(p.token_payout_fraction);
            }
            EventBody::ReviewerRegistered(b) => e.u32(b.reviewer.0),
            EventBody::AssetSubmitted(b) => {
                e.u64(b.asset.0);
                e.len(b.areas.len());
                for a in &b.areas {
                    e.u32(a.0);
                }
                e.real(b.entry_fee);
                e.reviewers(&b.experts);
            }
            EventBody::RatingRecorded(b)
            | EventBody::ReviewRecorded(b)
            | EventBody::PredictionRecorded(b) => {
                e.u64(b.asset.0);
                e.entries(&b.entries);
            }
            EventBody::AdmissionDecided(b) => {
                e.u64(b.asset.0);
                e.real(b.rbar);
                e.real(b.thresh);
                e.flag(b.admitted);
            }
            EventBody::EndorsementRecorded(b) => {
                e.u64(b.asset.0);
                e.len(b.entries.len());
                for &(from, to) in &b.entries {
                    e.u32(from.0);
                    e.u32(to.0);
                }
            }
            EventBody::SaleObserved(b) => {
                e.u64(b.asset.0);
                e.real(b.demand);
            }
            EventBody::ExpertiseDistributed(b) => {
                e.u32(b.area.0);
                e.0.push(b.source as u8);
                match b.eps {
                    Some(v) => {
                        e.flag(true);
                        e.real(v);
                    }
                    None => e.flag(false),
                }
                e.entries(&b.credits);
            }
            EventBody::ExpertsRotated(b) => {
                e.u32(b.area.0);
                e.reviewers(&b.experts);
                e.reviewers(&b.entered);
                e.reviewers(&b.left);
            }
            EventBody::ExpertiseBurned(b) => {
                e.u32(b.target.0);
                e.u32(b.area.0);
                e.reviewers(&b.votes);
                e.flag(b.applied);
                e.real(b.burned);
            }
            EventBody::FeeForfeited(b) => {
                e.u64(b.asset.0);
                e.real(b.amount);
                e.real(b.pool_after);
            }
            EventBody::IncentivePaid(b) => {
                e.u64(b.asset.0);
                e.entries(&b.payments);
                e.real(b.pool_after);
            }
        }
    }

    fn payload_json(&self) -> serde_json::Result<serde_json::Value> {
        match self {
            EventBody::EngineInitialized(b) => serde_json::to_value(b),
            EventBody::ReviewerRegistered(b) => serde_json::to_value(b),
            EventBody::AssetSubmitted(b) => serde_json::to_value(b),
            EventBody::RatingRecorded(b)
            | EventBody::ReviewRecorded(b)
            | EventBody::PredictionRecorded(b) => serde_json::to_value(b),
            EventBody::AdmissionDecided(b) => serde_json::to_value(b),
            EventBody::EndorsementRecorded(b) => serde_json::to_value(b),
            EventBody::SaleObserved(b) => serde_json::to_value(b),
            EventBody::ExpertiseDistributed(b) => serde_json::to_value(b),
            EventBody::ExpertsRotated(b) => serde_json::to_value(b),
            EventBody::ExpertiseBurned(b) => serde_json::to_value(b),
            EventBody::FeeForfeited(b) => serde_json::to_value(b),
            EventBody::IncentivePaid(b) => serde_json::to_value(b),
        }
    }

    fn from_json(kind: EventKind, v: serde_json::Value) -> serde_json::Result<Self> {
        use serde_json::from_value as de;
        Ok(match kind {
            EventKind::EngineInitialized => EventBody::EngineInitialized(de(v)?),
            EventKind::ReviewerRegistered => EventBody::ReviewerRegistered(de(v)?),
            EventKind::AssetSubmitted => EventBody::AssetSubmitted(de(v)?),
            EventKind::RatingRecorded => EventBody::RatingRecorded(de(v)?),
            EventKind::AdmissionDecided => EventBody::AdmissionDecided(de(v)?),
            EventKind::ReviewRecorded => EventBody::ReviewRecorded(de(v)?),
            EventKind::PredictionRecorded => EventBody::PredictionRecorded(de(v)?),
            EventKind::EndorsementRecorded => EventBody::EndorsementRecorded(de(v)?),
            EventKind::SaleObserved => EventBody::SaleObserved(de(v)?),
            EventKind::ExpertiseDistributed => EventBody::ExpertiseDistributed(de(v)?),
            EventKind::ExpertsRotated => EventBody::ExpertsRotated(de(v)?),
            EventKind::ExpertiseBurned => EventBody::ExpertiseBurned(de(v)?),
            EventKind::FeeForfeited => EventBody::FeeForfeited(de(v)?),
            EventKind::IncentivePaid => EventBody::IncentivePaid(de(v)?),
        })
    }
}

/// One entry of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolEvent<T> {
    pub seq: u64,
    pub round: Option<RoundId>,
    pub body: EventBody<T>,
    pub prev_hash: Digest,
    pub hash: Digest,
}

/// Bytes hashed into an event's digest.
pub fn hash_input<T: Scalar>(
    seq: u64,
    round: Option<RoundId>,
    body: &EventBody<T>,
    prev_hash: &Digest,
) -> Vec<u8> {
    let mut buf = Vec::with_capacity(64);
    buf.extend_from_slice(&seq.to_be_bytes());
    match round {
        Some(r) => {
            buf.push(1);
            buf.extend_from_slice(&r.0.to_be_bytes());
        }
        None => buf.push(0),
    }
    body.encode(&mut buf);
    buf.extend_from_slice(prev_hash);
    buf
}

pub fn event_hash<T: Scalar>(
    seq: u64,
    round: Option<RoundId>,
    body: &EventBody<T>,
    prev_hash: &Digest,
) -> Digest {
    let mut out = [0u8; 32];
    out.copy_from_slice(&Sha256::digest(hash_input(seq, round, body, prev_hash)));
    out
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    seq: u64,
    round: Option<u64>,
    kind: EventKind,
    payload: serde_json::Value,
    prev_hash: String,
    hash: String,
}

fn parse_digest(s: &str) -> Option<Digest> {
    if s.len() != 64 || !s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
        return None;
    }
    let mut out = [0u8; 32];
    hex::decode_to_slice(s, &mut out).ok()?;
    Some(out)
}

impl<T: Scalar> ProtocolEvent<T> {
    pub fn recompute_hash(&self) -> Digest {
        event_hash(self.seq, self.round, &self.body, &self.prev_hash)
    }

    pub fn to_line(&self) -> String {
        let line = Line {
            seq: self.seq,
            round: self.round.map(|r| r.0),
            kind: self.body.kind(),
            payload: self.body.payload_json().expect("payloads serialize"),
            prev_hash: hex::encode(self.prev_hash),
            hash: hex::encode(self.hash),
        };
        serde_json::to_string(&line).expect("event lines serialize")
    }

    pub fn from_line(s: &str) -> Result<Self, String> {
        let line: Line = serde_json::from_str(s).map_err(|e| e.to_string())?;
        let body = EventBody::from_json(line.kind, line.payload).map_err(|e| e.to_string())?;
        let prev_hash = parse_digest(&line.prev_hash).ok_or("malformed prev_hash")?;
        let hash = parse_digest(&line.hash).ok_or("malformed hash")?;
        let ev = Self { seq: line.seq, round: line.round.map(RoundId), body, prev_hash, hash };
        // The digest covers decoded values, so any byte change that decodes
        // to the same values must be caught here instead.
        if ev.to_line() != s {
            return Err("non-canonical encoding".into());
        }
        Ok(ev)
    }
}

/// Where appended events go. The log itself only keeps the chain head.
pub enum EventSink<T> {
    /// Hash chain only.
    Null,
    Memory(Vec<ProtocolEvent<T>>),
    /// JSON lines; the first write error is kept and reported by [`EventLog::finish`].
    Writer { out: Box<dyn Write + Send>, error: Option<io::Error> },
}

impl<T> EventSink<T> {
    pub fn memory() -> Self {
        EventSink::Memory(Vec::new())
    }

    pub fn writer(out: impl Write + Send + 'static) -> Self {
        EventSink::Writer { out: Box::new(out), error: None }
    }
}

impl<T> std::fmt::Debug for EventSink<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EventSink::Null => f.write_str("Null"),
            EventSink::Memory(v) => write!(f, "Memory({} events)", v.len()),
            EventSink::Writer { error, .. } => write!(f, "Writer(error: {error:?})"),
        }
    }
}

#[derive(Debug)]
pub struct EventLog<T> {
    next_seq: u64,
    head: Digest,
    sink: EventSink<T>,
}

impl<T: Scalar> EventLog<T> {
    pub fn new(sink: EventSink<T>) -> Self {
        Self { next_seq: 0, head: GENESIS_HASH, sink }
    }

    pub fn append(&mut self, round: Option<RoundId>, body: EventBody<T>) -> Digest {
        let seq = self.next_seq;
        let prev_hash = self.head;
        let hash = event_hash(seq, round, &body, &prev_hash);
        self.next_seq += 1;
        self.head = hash;
        let event = ProtocolEvent { seq, round, body, prev_hash, hash };
        match &mut self.sink {
            EventSink::Null => {}
            EventSink::Memory(events) => events.push(event),
            EventSink::Writer { out, error } => {
                if error.is_none() {
                    if let Err(e) = writeln!(out, "{}", event.to_line()) {
                        *error = Some(e);
                    }
                }
            }
        }
        hash
    }

    /// Number of events appended so far.
    pub fn len(&self) -> u64 {
        self.next_seq
    }

    pub fn is_empty(&self) -> bool {
        self.next_seq == 0
    }

    /// Hash of the most recent event (all zeros for an empty log).
    pub fn head(&self) -> Digest {
        self.head
    }

    /// Retained events when backed by a memory sink.
    pub fn events(&self) -> Option<&[ProtocolEvent<T>]> {
        match &self.sink {
            EventSink::Memory(v) => Some(v),
            _ => None,
        }
    }

    /// Moves retained events out of a memory sink.
    pub fn drain(&mut self) -> Vec<ProtocolEvent<T>> {
        match &mut self.sink {
            EventSink::Memory(v) => std::mem::take(v),
            _ => Vec::new(),
        }
    }

    /// Flushes a writer sink and reports the first write error, if any.
    pub fn finish(&mut self) -> io::Result<()> {
        match &mut self.sink {
            EventSink::Writer { out, error } => match error.take() {
                Some(e) => Err(e),
                None => out.flush(),
            },
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("event {index}: {reason}")]
pub struct VerifyError {
    /// Position of the first corrupt entry.
    pub index: u64,
    pub reason: String,
}

/// Incremental chain checker.
#[derive(Debug, Clone)]
pub struct ChainVerifier {
    next: u64,
    prev: Digest,
}

impl Default for ChainVerifier {
    fn default() -> Self {
        Self { next: 0, prev: GENESIS_HASH }
    }
}

impl ChainVerifier {
    pub fn check<T: Scalar>(&mut self, ev: &ProtocolEvent<T>) -> Result<(), VerifyError> {
        let fail = |reason: &str| Err(VerifyError { index: self.next, reason: reason.into() });
        if ev.seq != self.next {
            return fail(&format!("sequence number {} where {} was expected", ev.seq, self.next));
        }
        if ev.prev_hash != self.prev {
            return fail("prev_hash does not link to the preceding event");
        }
        if ev.recompute_hash() != ev.hash {
            return fail("hash does not match contents");
        }
        self.prev = ev.hash;
        self.next += 1;
        Ok(())
    }

    pub fn verified(&self) -> u64 {
        self.next
    }
}

/// Verifies an in-memory chain, returning the number of events.
pub fn verify_events<'a, T: Scalar>(
    events: impl IntoIterator<Item = &'a ProtocolEvent<T>>,
) -> Result<u64, VerifyError> {
    let mut v = ChainVerifier::default();
    for ev in events {
        v.check(ev)?;
    }
    Ok(v.verified())
}

/// Streams events from JSON lines; unparsable lines are reported by index.
pub struct LogReader<T, R> {
    lines: io::Lines<R>,
    index: u64,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Scalar, R: BufRead> LogReader<T, R> {
    pub fn new(reader: R) -> Self {
        Self { lines: reader.lines(), index: 0, _marker: std::marker::PhantomData }
    }
}

impl<T: Scalar, R: BufRead> Iterator for LogReader<T, R> {
    type Item = Result<ProtocolEvent<T>, VerifyError>;

    fn next(&mut self) -> Option<Self::Item> {
        let index = self.index;
        self.index += 1;
        let line = match self.lines.next()? {
            Ok(l) => l,
            Err(e) => return Some(Err(VerifyError { index, reason: format!("read error: {e}") })),
        };
        Some(
            ProtocolEvent::from_line(&line)
                .map_err(|reason| VerifyError { index, reason: format!("unparsable entry: {reason}") }),
        )
    }
}

/// Verifies a JSON-lines log, returning the number of events.
pub fn verify_reader<T: Scalar>(reader: impl BufRead) -> Result<u64, VerifyError> {
    let mut v = ChainVerifier::default();
    for ev in LogReader::<T, _>::new(reader) {
        v.check(&ev?)?;
    }
    Ok(v.verified())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_log() -> EventLog<f64> {
        let mut log = EventLog::new(EventSink::memory());
        log.append(None, EventBody::ReviewerRegistered(Registration { reviewer: ReviewerId(3) }));
        log.append(
            Some(RoundId(1)),
            EventBody::ReviewRecorded(Scores {
                asset: AssetId(9),
                entries: vec![Entry(ReviewerId(3), 0.25), Entry(ReviewerId(4), 0.5)],
            }),
        );
        log.append(
            Some(RoundId(1)),
            EventBody::ExpertiseDistributed(Distribution {
                area: AreaId(0),
                source: GainSource::Prediction,
                eps: Some(0.01),
                credits: vec![Entry(ReviewerId(3), 12.5)],
            }),
        );
        log
    }

    #[test]
    fn empty_log_verifies() {
        assert_eq!(verify_events::<f64>(&[]), Ok(0));
        assert_eq!(verify_reader::<f64>(&b""[..]), Ok(0));
    }

    #[test]
    fn append_then_verify() {
        let log = sample_log();
        assert_eq!(verify_events(log.events().unwrap()), Ok(3));
        assert_eq!(log.head(), log.events().unwrap()[2].hash);
    }

    #[test]
    fn lines_round_trip() {
        let log = sample_log();
        for ev in log.events().unwrap() {
            let line = ev.to_line();
            assert_eq!(ProtocolEvent::<f64>::from_line(&line).unwrap(), *ev);
        }
    }

    #[test]
    fn tampered_payload_is_reported_at_its_index() {
        let log = sample_log();
        let mut events = log.events().unwrap().to_vec();
        if let EventBody::ReviewRecorded(s) = &mut events[1].body {
            s.entries[0].1 = 0.26;
        }
        let err = verify_events(&events).unwrap_err();
        assert_eq!(err.index, 1);
    }

    #[test]
    fn text_form_detects_byte_flips() {
        let log = sample_log();
        let text: String = log.events().unwrap().iter().map(|e| e.to_line() + "\n").collect();
        let line_start = text.find('\n').unwrap() + 1;
        let payload_at = line_start + text[line_start..].find("\"payload\"").unwrap() + 12;
        let mut bytes = text.into_bytes();
        bytes[payload_at] ^= 0x01;
        let err = verify_reader::<f64>(&bytes[..]).unwrap_err();
        assert_eq!(err.index, 1);
    }

    #[test]
    fn hash_covers_round_and_kind() {
        let body = EventBody::<f64>::SaleObserved(Sale { asset: AssetId(1), demand: 0.5 });
        let a = event_hash(0, Some(RoundId(1)), &body, &GENESIS_HASH);
        let b = event_hash(0, Some(RoundId(2)), &body, &GENESIS_HASH);
        let c = event_hash(0, None, &body, &GENESIS_HASH);
        assert!(a != b && a != c && b != c);
    }
}
