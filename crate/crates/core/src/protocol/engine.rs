use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::error::CoreError;
use crate::ids::{AreaId, AssetId, ReviewerId, RoundId};
use crate::incentives::{
    admit, distribute_prediction_pool, endorsement_gain, for_each_dividend, prediction_error,
    prediction_shares, system_error, weighted_mean_rating,
};
use crate::ledger::{BurnOutcome, ExpertiseLedger};
use crate::params::IncentiveParams;
use crate::scalar::Scalar;

use super::event::{
    Admission, Burn, Distribution, EngineInit, Endorsements, Entry, EventBody, EventLog, EventSink,
    Forfeit, GainSource, Payout, Registration, Rotation, Sale, Scores, Submission,
};
use super::round::{listing_order, AssetRecord, AssetState, RoundState};
use super::tokens::TokenLedger;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("unknown round {0}")]
    UnknownRound(RoundId),
    #[error("{asset} already has open round {round}")]
    DuplicateRound { asset: AssetId, round: RoundId },
    #[error("asset has no area tags")]
    EmptyAreaTags,
    #[error("{round} is {actual}, operation requires {expected}")]
    WrongState { round: RoundId, expected: AssetState, actual: AssetState },
    #[error("{reviewer} is not an assigned expert of {round}")]
    NotAssigned { round: RoundId, reviewer: ReviewerId },
    #[error("duplicate {what} from {reviewer}")]
    Duplicate { what: &'static str, reviewer: ReviewerId },
    #[error("{0} cannot endorse their own review")]
    SelfEndorsement(ReviewerId),
    #[error("{endorsee} has no review to endorse (endorser {endorser})")]
    EndorseeWithoutReview { endorser: ReviewerId, endorsee: ReviewerId },
}

pub type Result<T, E = ProtocolError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionDecision<T> {
    pub round: RoundId,
    pub asset: AssetId,
    pub rbar: T,
    pub admitted: bool,
    /// Fee added to the incentive pool on rejection.
    pub forfeited: T,
}

/// Per-area settlement totals.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaSettlement<T> {
    pub area: AreaId,
    /// Sum of scaled endorsement gains.
    pub endorsement: T,
    pub dividends: T,
    /// `None` when nobody predicted.
    pub eps: Option<T>,
    pub prediction: T,
    pub prediction_dividends: T,
    pub experts: Vec<ReviewerId>,
    pub turnover: usize,
}

impl<T: Scalar> AreaSettlement<T> {
    pub fn total_credit(&self) -> T {
        self.endorsement + self.dividends + self.prediction + self.prediction_dividends
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome<T> {
    pub round: RoundId,
    pub asset: AssetId,
    pub rbar: T,
    pub demand: T,
    pub areas: Vec<AreaSettlement<T>>,
    pub tokens_paid: T,
}

impl<T: Scalar> RoundOutcome<T> {
    pub fn total_credit(&self) -> T {
        self.areas.iter().map(AreaSettlement::total_credit).sum()
    }
}

fn unit<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    if v >= T::zero() && v <= T::one() {
        Ok(())
    } else {
        Err(CoreError::OutOfUnitRange { name, value: v.to_f64().unwrap_or(f64::NAN) }.into())
    }
}

fn entries<T: Scalar>(pairs: &[(ReviewerId, T)]) -> Vec<Entry<T>> {
    pairs.iter().map(|&(id, v)| Entry(id, v)).collect()
}

/// Sparse credits accumulated in a dense buffer, emitted ascending by id.
struct Accumulator<T> {
    values: Vec<T>,
}

impl<T: Scalar> Accumulator<T> {
    fn new() -> Self {
        Self { values: Vec::new() }
    }

    fn add(&mut self, id: ReviewerId, amount: T) {
        let i = id.0 as usize;
        if self.values.len() <= i {
            self.values.resize(i + 1, T::zero());
        }
        self.values[i] = self.values[i] + amount;
    }

    fn finish(self) -> Vec<(ReviewerId, T)> {
        self.values
            .into_iter()
            .enumerate()
            .filter(|&(_, v)| v > T::zero())
            .map(|(i, v)| (ReviewerId(i as u32), v))
            .collect()
    }
}

struct AreaPlan<T> {
    area: AreaId,
    endorsement: Vec<(ReviewerId, T)>,
    dividends: Vec<(ReviewerId, T)>,
    eps: Option<T>,
    prediction: Vec<(ReviewerId, T)>,
    prediction_dividends: Vec<(ReviewerId, T)>,
}

fn total<T: Scalar>(v: &[(ReviewerId, T)]) -> T {
    v.iter().map(|&(_, x)| x).sum()
}

/// The round state machine over an expertise ledger, a token ledger and
/// the event log. Every successful mutation appends exactly the events
/// describing it; failed calls change nothing.
#[derive(Debug)]
pub struct Engine<T: Scalar> {
    params: IncentiveParams<T>,
    ledger: ExpertiseLedger<T>,
    tokens: TokenLedger<T>,
    log: EventLog<T>,
    experts: BTreeMap<AreaId, Vec<ReviewerId>>,
    open: BTreeMap<RoundId, RoundState<T>>,
    closed: BTreeMap<RoundId, AssetState>,
    open_assets: BTreeMap<AssetId, RoundId>,
    next_round: u64,
}

impl<T: Scalar> Engine<T> {
    pub fn new(
        params: IncentiveParams<T>,
        areas: impl IntoIterator<Item = AreaId>,
        sink: EventSink<T>,
    ) -> Result<Self> {
        params.validate()?;
        let ledger = ExpertiseLedger::new(areas)?;
        let experts = ledger.areas().map(|a| (a, Vec::new())).collect();
        let mut log = EventLog::new(sink);
        log.append(
            None,
            EventBody::EngineInitialized(EngineInit { areas: ledger.areas().collect(), params }),
        );
        Ok(Self {
            params,
            ledger,
            tokens: TokenLedger::default(),
            log,
            experts,
            open: BTreeMap::new(),
            closed: BTreeMap::new(),
            open_assets: BTreeMap::new(),
            next_round: 0,
        })
    }

    pub fn params(&self) -> &IncentiveParams<T> {
        &self.params
    }

    pub fn ledger(&self) -> &ExpertiseLedger<T> {
        &self.ledger
    }

    pub fn tokens(&self) -> &TokenLedger<T> {
        &self.tokens
    }

    pub fn log(&self) -> &EventLog<T> {
        &self.log
    }

    pub fn log_mut(&mut self) -> &mut EventLog<T> {
        &mut self.log
    }

    /// Current expert set of an area, best first.
    pub fn current_experts(&self, area: AreaId) -> &[ReviewerId] {
        self.experts.get(&area).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn round(&self, id: RoundId) -> Option<&RoundState<T>> {
        self.open.get(&id)
    }

    /// State of any round ever opened, including finished ones.
    pub fn round_state(&self, id: RoundId) -> Option<AssetState> {
        self.open.get(&id).map(|r| r.asset.state).or_else(|| self.closed.get(&id).copied())
    }

    pub fn open_rounds(&self) -> impl Iterator<Item = &RoundState<T>> {
        self.open.values()
    }

    pub fn register_reviewer(&mut self, id: ReviewerId) -> Result<()> {
        self.ledger.register(id)?;
        self.log.append(None, EventBody::ReviewerRegistered(Registration { reviewer: id }));
        Ok(())
    }

    /// Overwrites initial expertise in one area for a batch of reviewers.
    pub fn bootstrap_expertise(&mut self, area: AreaId, values: &[(ReviewerId, T)]) -> Result<()> {
        if !self.ledger.has_area(area) {
            return Err(CoreError::UnknownArea(area).into());
        }
        for &(id, v) in values {
            if !self.ledger.is_registered(id) {
                return Err(CoreError::UnknownReviewer(id).into());
            }
            if !(v.is_finite() && v >= T::zero()) {
                return Err(CoreError::Negative {
                    name: "expertise",
                    value: v.to_f64().unwrap_or(f64::NAN),
                }
                .into());
            }
        }
        for &(id, v) in values {
            self.ledger.set_expertise(id, area, v)?;
        }
        self.log.append(
            None,
            EventBody::ExpertiseDistributed(Distribution {
                area,
                source: GainSource::Bootstrap,
                eps: None,
                credits: entries(values),
            }),
        );
        Ok(())
    }

    fn rotate_area(&mut self, round: Option<RoundId>, area: AreaId) -> (Vec<ReviewerId>, usize) {
        let next = self.ledger.select_experts(area, self.params.k);
        let prev: BTreeSet<ReviewerId> =
            self.experts.get(&area).map(|v| v.iter().copied().collect()).unwrap_or_default();
        let now: BTreeSet<ReviewerId> = next.iter().copied().collect();
        let entered: Vec<ReviewerId> = now.difference(&prev).copied().collect();
        let left: Vec<ReviewerId> = prev.difference(&now).copied().collect();
        let turnover = entered.len();
        self.log.append(
            round,
            EventBody::ExpertsRotated(Rotation { area, experts: next.clone(), entered, left }),
        );
        self.experts.insert(area, next.clone());
        (next, turnover)
    }

    /// Re-selects the expert set of every area; returns per-area turnover.
    pub fn rotate_experts(&mut self) -> BTreeMap<AreaId, usize> {
        let areas: Vec<AreaId> = self.ledger.areas().collect();
        areas.into_iter().map(|a| (a, self.rotate_area(None, a).1)).collect()
    }

    /// Opens a round for the asset with a frozen expert set, round-start
    /// expertise tables and an investment snapshot.
    pub fn submit_asset(&mut self, asset: AssetRecord<T>) -> Result<RoundId> {
        if asset.state != AssetState::Submitted {
            return Err(ProtocolError::WrongState {
                round: RoundId(self.next_round),
                expected: AssetState::Submitted,
                actual: asset.state,
            });
        }
        let areas: Vec<AreaId> =
            asset.area_tags.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        if areas.is_empty() {
            return Err(ProtocolError::EmptyAreaTags);
        }
        if let Some(&a) = areas.iter().find(|&&a| !self.ledger.has_area(a)) {
            return Err(CoreError::UnknownArea(a).into());
        }
        if let Some(&round) = self.open_assets.get(&asset.id) {
            return Err(ProtocolError::DuplicateRound { asset: asset.id, round });
        }
        if !(asset.entry_fee.is_finite() && asset.entry_fee >= T::zero()) {
            return Err(CoreError::Negative {
                name: "entry_fee",
                value: asset.entry_fee.to_f64().unwrap_or(f64::NAN),
            }
            .into());
        }
        let id = RoundId(self.next_round);
        self.next_round += 1;
        let experts: Vec<ReviewerId> = areas
            .iter()
            .flat_map(|a| self.current_experts(*a).iter().copied())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let area_experts: BTreeMap<AreaId, Vec<ReviewerId>> = areas
            .iter()
            .map(|&a| {
                let mut v = self.current_experts(a).to_vec();
                v.sort_unstable();
                (a, v)
            })
            .collect();
        let mut start_expertise = BTreeMap::new();
        for &a in &areas {
            start_expertise.insert(a, self.ledger.area_table(a)?);
        }
        self.log.append(
            Some(id),
            EventBody::AssetSubmitted(Submission {
                asset: asset.id,
                areas: areas.clone(),
                entry_fee: asset.entry_fee,
                experts: experts.clone(),
            }),
        );
        let record = AssetRecord { area_tags: areas, state: AssetState::UnderAdmission, ..asset };
        self.open_assets.insert(record.id, id);
        self.open.insert(
            id,
            RoundState {
                id,
                asset: record,
                experts,
                area_experts,
                start_expertise,
                investments: Some(self.ledger.investment_snapshot()),
                ratings: BTreeMap::new(),
                rbar: None,
                reviews: BTreeMap::new(),
                predictions: BTreeMap::new(),
                endorsements: BTreeMap::new(),
                observed_demand: None,
            },
        );
        Ok(id)
    }

    fn open_round(&self, id: RoundId, expected: AssetState) -> Result<&RoundState<T>> {
        match self.open.get(&id) {
            Some(r) if r.asset.state == expected => Ok(r),
            Some(r) => Err(ProtocolError::WrongState { round: id, expected, actual: r.asset.state }),
            None => match self.closed.get(&id) {
                Some(&actual) => Err(ProtocolError::WrongState { round: id, expected, actual }),
                None => Err(ProtocolError::UnknownRound(id)),
            },
        }
    }

    fn check_scores(
        existing: &BTreeMap<ReviewerId, T>,
        batch: &[(ReviewerId, T)],
        what: &'static str,
    ) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &(id, v) in batch {
            unit(what, v)?;
            if existing.contains_key(&id) || !seen.insert(id) {
                return Err(ProtocolError::Duplicate { what, reviewer: id });
            }
        }
        Ok(())
    }

    fn check_registered(&self, ids: impl IntoIterator<Item = ReviewerId>) -> Result<()> {
        for id in ids {
            if !self.ledger.is_registered(id) {
                return Err(CoreError::UnknownReviewer(id).into());
            }
        }
        Ok(())
    }

    pub fn record_rating(&mut self, round: RoundId, expert: ReviewerId, rating: T) -> Result<()> {
        self.record_ratings(round, &[(expert, rating)])
    }

    /// Ratings from experts assigned at round start.
    pub fn record_ratings(&mut self, round: RoundId, batch: &[(ReviewerId, T)]) -> Result<()> {
        let r = self.open_round(round, AssetState::UnderAdmission)?;
        if let Some(&(id, _)) = batch.iter().find(|(id, _)| !r.is_assigned(*id)) {
            return Err(ProtocolError::NotAssigned { round, reviewer: id });
        }
        Self::check_scores(&r.ratings, batch, "rating")?;
        if batch.is_empty() {
            return Ok(());
        }
        let r = self.open.get_mut(&round).expect("checked above");
        r.ratings.extend(batch.iter().copied());
        let asset = r.asset.id;
        self.log.append(
            Some(round),
            EventBody::RatingRecorded(Scores { asset, entries: entries(batch) }),
        );
        Ok(())
    }

    /// Closes the rating window: lists the asset, or rejects it and forfeits its fee.
    pub fn finalize_admission(&mut self, round: RoundId) -> Result<AdmissionDecision<T>> {
        let r = self.open_round(round, AssetState::UnderAdmission)?;
        if r.ratings.is_empty() {
            return Err(CoreError::Degenerate("no ratings recorded").into());
        }
        let weighted: Vec<(T, T)> =
            r.ratings.iter().map(|(&id, &rating)| (rating, r.start_weight(id))).collect();
        let rbar = weighted_mean_rating(&weighted)?;
        let admitted = admit(rbar, self.params.thresh);
        let asset = r.asset.id;
        let fee = r.asset.entry_fee;
        self.log.append(
            Some(round),
            EventBody::AdmissionDecided(Admission {
                asset,
                rbar,
                thresh: self.params.thresh,
                admitted,
            }),
        );
        let forfeited = if admitted {
            let r = self.open.get_mut(&round).expect("checked above");
            r.rbar = Some(rbar);
            r.asset.state = AssetState::Listed;
            T::zero()
        } else {
            let pool_after = self.tokens.forfeit(fee);
            self.log.append(
                Some(round),
                EventBody::FeeForfeited(Forfeit { asset, amount: fee, pool_after }),
            );
            self.open.remove(&round);
            self.open_assets.remove(&asset);
            self.closed.insert(round, AssetState::Rejected);
            fee
        };
        Ok(AdmissionDecision { round, asset, rbar, admitted, forfeited })
    }

    /// Listed assets in display order.
    pub fn listing_order(&self) -> Vec<AssetId> {
        let listed: Vec<(AssetId, T)> = self
            .open
            .values()
            .filter(|r| r.asset.state == AssetState::Listed)
            .map(|r| (r.asset.id, r.rbar.expect("listed rounds carry rbar")))
            .collect();
        listing_order(&listed)
    }

    pub fn record_review(&mut self, round: RoundId, reviewer: ReviewerId, review: T) -> Result<()> {
        self.record_reviews(round, &[(reviewer, review)])
    }

    pub fn record_reviews(&mut self, round: RoundId, batch: &[(ReviewerId, T)]) -> Result<()> {
        let r = self.open_round(round, AssetState::Listed)?;
        Self::check_scores(&r.reviews, batch, "review")?;
        self.check_registered(batch.iter().map(|&(id, _)| id))?;
        if batch.is_empty() {
            return Ok(());
        }
        let r = self.open.get_mut(&round).expect("checked above");
        r.reviews.extend(batch.iter().copied());
        let asset = r.asset.id;
        self.log.append(
            Some(round),
            EventBody::ReviewRecorded(Scores { asset, entries: entries(batch) }),
        );
        Ok(())
    }

    pub fn record_prediction(
        &mut self,
        round: RoundId,
        reviewer: ReviewerId,
        prediction: T,
    ) -> Result<()> {
        self.record_predictions(round, &[(reviewer, prediction)])
    }

    pub fn record_predictions(&mut self, round: RoundId, batch: &[(ReviewerId, T)]) -> Result<()> {
        let r = self.open_round(round, AssetState::Listed)?;
        Self::check_scores(&r.predictions, batch, "prediction")?;
        self.check_registered(batch.iter().map(|&(id, _)| id))?;
        if batch.is_empty() {
            return Ok(());
        }
        let r = self.open.get_mut(&round).expect("checked above");
        r.predictions.extend(batch.iter().copied());
        let asset = r.asset.id;
        self.log.append(
            Some(round),
            EventBody::PredictionRecorded(Scores { asset, entries: entries(batch) }),
        );
        Ok(())
    }

    pub fn record_endorsement(
        &mut self,
        round: RoundId,
        endorser: ReviewerId,
        endorsee: ReviewerId,
    ) -> Result<()> {
        self.record_endorsements(round, &[(endorser, endorsee)])
    }

    /// `(endorser, endorsee)` pairs; one endorsement per endorser per round.
    pub fn record_endorsements(
        &mut self,
        round: RoundId,
        batch: &[(ReviewerId, ReviewerId)],
    ) -> Result<()> {
        let r = self.open_round(round, AssetState::Listed)?;
        let mut seen = BTreeSet::new();
        for &(from, to) in batch {
            if from == to {
                return Err(ProtocolError::SelfEndorsement(from));
            }
            if r.endorsements.contains_key(&from) || !seen.insert(from) {
                return Err(ProtocolError::Duplicate { what: "endorsement", reviewer: from });
            }
            if !r.reviews.contains_key(&to) {
                return Err(ProtocolError::EndorseeWithoutReview { endorser: from, endorsee: to });
            }
        }
        self.check_registered(batch.iter().map(|&(from, _)| from))?;
        if batch.is_empty() {
            return Ok(());
        }
        let r = self.open.get_mut(&round).expect("checked above");
        r.endorsements.extend(batch.iter().copied());
        let asset = r.asset.id;
        self.log.append(
            Some(round),
            EventBody::EndorsementRecorded(Endorsements { asset, entries: batch.to_vec() }),
        );
        Ok(())
    }

    fn plan_area(&self, r: &RoundState<T>, area: AreaId, demand: T) -> Result<AreaPlan<T>> {
        let p = &self.params;
        let snapshot = r.investments.as_deref().expect("snapshot held until settlement");
        let exp = |id: ReviewerId| r.start_expertise(id, area);

        let mut received: BTreeMap<ReviewerId, Vec<(ReviewerId, T)>> = BTreeMap::new();
        // Endorsements by non-experts create investments but confer nothing.
        for (&from, &to) in r.endorsements.iter().filter(|(&f, _)| r.is_area_expert(f, area)) {
            let delta = endorsement_gain(exp(from), exp(to), p)? * p.w_endorse;
            if delta > T::zero() {
                received.entry(to).or_default().push((from, delta));
            }
        }
        let mut endorsement = Vec::with_capacity(received.len());
        let mut dividends = Accumulator::new();
        for (&to, by) in &received {
            let gained = total(by);
            endorsement.push((to, gained));
            for_each_dividend(gained, by, snapshot.row(to), p.c1, |i, a| dividends.add(i, a));
        }

        let (eps, prediction, prediction_dividends) = if r.predictions.is_empty() {
            (None, Vec::new(), Vec::new())
        } else {
            let errors: Vec<(ReviewerId, T)> = r
                .predictions
                .iter()
                .map(|(&id, &pred)| (id, prediction_error(demand, pred)))
                .collect();
            let weighted: Vec<(T, T)> = errors.iter().map(|&(id, e)| (e, exp(id))).collect();
            let eps = system_error(&weighted)?;
            let shares = prediction_shares(&errors, eps, p);
            let paid = distribute_prediction_pool(&shares, eps, p);
            let mut extra = Accumulator::new();
            if p.broad_dividends {
                for &(id, amount) in &paid {
                    for_each_dividend(amount, &[], snapshot.row(id), p.c1, |i, a| extra.add(i, a));
                }
            }
            (Some(eps), paid, extra.finish())
        };
        Ok(AreaPlan {
            area,
            endorsement,
            dividends: dividends.finish(),
            eps,
            prediction,
            prediction_dividends,
        })
    }

    fn apply_credits(
        &mut self,
        round: RoundId,
        area: AreaId,
        source: GainSource,
        eps: Option<T>,
        credits: &[(ReviewerId, T)],
    ) {
        for &(id, amount) in credits {
            self.ledger.credit(id, area, amount).expect("credits target registered reviewers");
        }
        self.log.append(
            Some(round),
            EventBody::ExpertiseDistributed(Distribution {
                area,
                source,
                eps,
                credits: entries(credits),
            }),
        );
    }

    /// Settles a listed asset against its observed demand.
    ///
    /// Every gain is computed from round-start expertise and the round-start
    /// investment snapshot before anything is applied.
    pub fn settle_round(&mut self, round: RoundId, demand: T) -> Result<RoundOutcome<T>> {
        let r = self.open_round(round, AssetState::Listed)?;
        unit("observed demand", demand)?;
        let plans = r
            .asset
            .area_tags
            .iter()
            .map(|&a| self.plan_area(r, a, demand))
            .collect::<Result<Vec<_>>>()?;

        let mut r = self.open.remove(&round).expect("checked above");
        let asset = r.asset.id;
        r.observed_demand = Some(demand);
        r.asset.state = AssetState::Sold;
        self.log.append(Some(round), EventBody::SaleObserved(Sale { asset, demand }));

        for plan in &plans {
            self.apply_credits(round, plan.area, GainSource::Endorsement, None, &plan.endorsement);
            self.apply_credits(round, plan.area, GainSource::Dividend, None, &plan.dividends);
        }
        for plan in &plans {
            self.apply_credits(round, plan.area, GainSource::Prediction, plan.eps, &plan.prediction);
            if self.params.broad_dividends {
                self.apply_credits(
                    round,
                    plan.area,
                    GainSource::PredictionDividend,
                    None,
                    &plan.prediction_dividends,
                );
            }
        }

        // The snapshot must go first or the increments would copy the table.
        r.investments = None;
        for (&from, &to) in &r.endorsements {
            self.ledger.record_investment(from, to);
        }

        let mut areas = Vec::with_capacity(plans.len());
        for plan in plans {
            let (experts, turnover) = self.rotate_area(Some(round), plan.area);
            areas.push(AreaSettlement {
                area: plan.area,
                endorsement: total(&plan.endorsement),
                dividends: total(&plan.dividends),
                eps: plan.eps,
                prediction: total(&plan.prediction),
                prediction_dividends: total(&plan.prediction_dividends),
                experts,
                turnover,
            });
        }

        let budget = self.tokens.incentive_pool() * self.params.token_payout_fraction;
        let weights: Vec<(ReviewerId, T)> =
            r.ratings.keys().map(|&id| (id, r.start_weight(id))).collect();
        let weight_sum = total(&weights);
        let payments: Vec<(ReviewerId, T)> = if budget > T::zero() && weight_sum > T::zero() {
            weights
                .iter()
                .map(|&(id, w)| (id, budget * w / weight_sum))
                .filter(|&(_, a)| a > T::zero())
                .collect()
        } else {
            Vec::new()
        };
        let pool_after = self.tokens.pay(&payments);
        self.log.append(
            Some(round),
            EventBody::IncentivePaid(Payout { asset, payments: entries(&payments), pool_after }),
        );

        r.asset.state = AssetState::Settled;
        self.open_assets.remove(&asset);
        self.closed.insert(round, AssetState::Settled);
        Ok(RoundOutcome {
            round,
            asset,
            rbar: r.rbar.expect("listed rounds carry rbar"),
            demand,
            areas,
            tokens_paid: total(&payments),
        })
    }

    /// Majority vote of the area's current experts against `target`. When
    /// applied, the area's expert set is re-selected immediately.
    pub fn burn_expertise(
        &mut self,
        target: ReviewerId,
        votes: &[ReviewerId],
        area: AreaId,
    ) -> Result<BurnOutcome<T>> {
        let voters: BTreeSet<ReviewerId> = votes.iter().copied().collect();
        if voters.len() != votes.len() {
            let dup = votes.iter().find(|v| votes.iter().filter(|w| w == v).count() > 1);
            return Err(ProtocolError::Duplicate {
                what: "burn vote",
                reviewer: *dup.expect("a duplicate exists"),
            });
        }
        let experts: BTreeSet<ReviewerId> = self.current_experts(area).iter().copied().collect();
        let outcome = self.ledger.burn_expertise(target, &voters, &experts, area, &self.params)?;
        self.log.append(
            None,
            EventBody::ExpertiseBurned(Burn {
                target,
                area,
                votes: votes.to_vec(),
                applied: outcome.applied,
                burned: outcome.burned,
            }),
        );
        if outcome.applied {
            self.rotate_area(None, area);
        }
        Ok(outcome)
    }
}
