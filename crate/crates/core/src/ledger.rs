//! Per-area expertise scores and cumulative investment counts.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::CoreError;
use crate::ids::{AreaId, ReviewerId};
use crate::incentives::InvestorRow;
use crate::params::IncentiveParams;
use crate::scalar::Scalar;

/// Largest reviewer id a ledger accepts; tables are indexed by the raw id.
pub const MAX_REVIEWER_ID: u32 = (1 << 24) - 1;

/// Investment counts for every endorsee, shared copy-on-write so open rounds
/// can hold the table as it stood when they started.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvestmentTable {
    rows: Vec<InvestorRow>,
}

impl InvestmentTable {
    pub fn row(&self, endorsee: ReviewerId) -> &InvestorRow {
        static EMPTY: InvestorRow = InvestorRow::EMPTY;
        self.rows.get(endorsee.0 as usize).unwrap_or(&EMPTY)
    }

    pub fn count(&self, investor: ReviewerId, endorsee: ReviewerId) -> u64 {
        self.row(endorsee).count(investor)
    }

    fn increment(&mut self, investor: ReviewerId, endorsee: ReviewerId) {
        let idx = endorsee.0 as usize;
        if self.rows.len() <= idx {
            self.rows.resize_with(idx + 1, InvestorRow::default);
        }
        self.rows[idx].increment(investor);
    }

    /// Nonzero `(investor, endorsee, count)` triples in endorsee-then-investor order.
    pub fn entries(&self) -> impl Iterator<Item = (ReviewerId, ReviewerId, u64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(e, row)| {
            row.investors().iter().map(move |&(i, n)| (i, ReviewerId(e as u32), n))
        })
    }
}

/// Result of a majority-vote burn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurnOutcome<T> {
    pub applied: bool,
    pub burned: T,
}

/// The protocol's only persistent reputation state.
///
/// Expertise is kept per area in a dense table indexed by reviewer id; every
/// entry is non-negative at all times.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertiseLedger<T> {
    registered: Vec<bool>,
    population: usize,
    expertise: BTreeMap<AreaId, Vec<T>>,
    invshare: Arc<InvestmentTable>,
}

impl<T: Scalar> ExpertiseLedger<T> {
    pub fn new(areas: impl IntoIterator<Item = AreaId>) -> Result<Self, CoreError> {
        let expertise: BTreeMap<_, _> = areas.into_iter().map(|a| (a, Vec::new())).collect();
        if expertise.is_empty() {
            return Err(CoreError::InvalidParam {
                name: "areas",
                reason: "at least one area of expertise is required".into(),
            });
        }
        Ok(Self {
            registered: Vec::new(),
            population: 0,
            expertise,
            invshare: Arc::default(),
        })
    }

    pub fn areas(&self) -> impl Iterator<Item = AreaId> + '_ {
        self.expertise.keys().copied()
    }

    pub fn has_area(&self, area: AreaId) -> bool {
        self.expertise.contains_key(&area)
    }

    pub fn register(&mut self, id: ReviewerId) -> Result<(), CoreError> {
        if id.0 > MAX_REVIEWER_ID {
            return Err(CoreError::IdTooLarge(id));
        }
        if self.is_registered(id) {
            return Err(CoreError::AlreadyRegistered(id));
        }
        let idx = id.0 as usize;
        if self.registered.len() <= idx {
            self.registered.resize(idx + 1, false);
        }
        self.registered[idx] = true;
        self.population += 1;
        Ok(())
    }

    pub fn is_registered(&self, id: ReviewerId) -> bool {
        self.registered.get(id.0 as usize).copied().unwrap_or(false)
    }

    pub fn population(&self) -> usize {
        self.population
    }

    /// Registered reviewers in ascending id order.
    pub fn reviewers(&self) -> impl Iterator<Item = ReviewerId> + '_ {
        self.registered
            .iter()
            .enumerate()
            .filter(|(_, &r)| r)
            .map(|(i, _)| ReviewerId(i as u32))
    }

    /// Expertise of `id` in `area`; zero for unknown reviewers or areas.
    pub fn expertise(&self, id: ReviewerId, area: AreaId) -> T {
        self.expertise
            .get(&area)
            .and_then(|v| v.get(id.0 as usize))
            .copied()
            .unwrap_or_else(T::zero)
    }

    /// Dense copy of an area's expertise, indexed by reviewer id.
    pub fn area_table(&self, area: AreaId) -> Result<Vec<T>, CoreError> {
        let mut table = self.expertise.get(&area).ok_or(CoreError::UnknownArea(area))?.clone();
        table.resize(self.registered.len(), T::zero());
        Ok(table)
    }

    pub fn total_expertise(&self, area: AreaId) -> T {
        self.expertise.get(&area).map(|v| v.iter().copied().sum()).unwrap_or_else(T::zero)
    }

    fn slot(&mut self, id: ReviewerId, area: AreaId) -> Result<&mut T, CoreError> {
        if !self.is_registered(id) {
            return Err(CoreError::UnknownReviewer(id));
        }
        let table = self.expertise.get_mut(&area).ok_or(CoreError::UnknownArea(area))?;
        let idx = id.0 as usize;
        if table.len() <= idx {
            table.resize(idx + 1, T::zero());
        }
        Ok(&mut table[idx])
    }

    /// Overwrites a reviewer's expertise; used for bootstrapping.
    pub fn set_expertise(&mut self, id: ReviewerId, area: AreaId, value: T) -> Result<(), CoreError> {
        if !(value.is_finite() && value >= T::zero()) {
            return Err(CoreError::Negative {
                name: "expertise",
                value: value.to_f64().unwrap_or(f64::NAN),
            });
        }
        *self.slot(id, area)? = value;
        Ok(())
    }

    pub fn credit(&mut self, id: ReviewerId, area: AreaId, amount: T) -> Result<(), CoreError> {
        if !(amount.is_finite() && amount >= T::zero()) {
            return Err(CoreError::Negative {
                name: "credit",
                value: amount.to_f64().unwrap_or(f64::NAN),
            });
        }
        let slot = self.slot(id, area)?;
        *slot = *slot + amount;
        Ok(())
    }

    /// The top `k` reviewers of an area by expertise, ties by ascending id.
    ///
    /// When fewer than `k` reviewers hold positive expertise the remaining
    /// slots go to zero-expertise reviewers in ascending id order.
    pub fn select_experts(&self, area: AreaId, k: usize) -> Vec<ReviewerId> {
        let mut ranked: Vec<(ReviewerId, T)> =
            self.reviewers().map(|id| (id, self.expertise(id, area))).collect();
        let order = |a: &(ReviewerId, T), b: &(ReviewerId, T)| {
            b.1.partial_cmp(&a.1).expect("expertise is never NaN").then(a.0.cmp(&b.0))
        };
        if k < ranked.len() {
            ranked.select_nth_unstable_by(k, order);
            ranked.truncate(k);
        }
        ranked.sort_unstable_by(order);
        ranked.into_iter().map(|(id, _)| id).collect()
    }

    /// Majority-vote penalty: multiplies the target's expertise in `area` by
    /// `1 - burn_fraction` when strictly more than half of `current_experts` voted.
    pub fn burn_expertise(
        &mut self,
        target: ReviewerId,
        votes: &BTreeSet<ReviewerId>,
        current_experts: &BTreeSet<ReviewerId>,
        area: AreaId,
        params: &IncentiveParams<T>,
    ) -> Result<BurnOutcome<T>, CoreError> {
        if let Some(&v) = votes.iter().find(|v| !current_experts.contains(v)) {
            return Err(CoreError::VoterNotExpert(v));
        }
        if !self.has_area(area) {
            return Err(CoreError::UnknownArea(area));
        }
        if !self.is_registered(target) {
            return Err(CoreError::UnknownReviewer(target));
        }
        if 2 * votes.len() <= current_experts.len() {
            return Ok(BurnOutcome { applied: false, burned: T::zero() });
        }
        let slot = self.slot(target, area)?;
        let before = *slot;
        let after = (before * (T::one() - params.burn_fraction)).max(T::zero());
        *slot = after;
        Ok(BurnOutcome { applied: true, burned: before - after })
    }

    pub fn invshare(&self, investor: ReviewerId, endorsee: ReviewerId) -> u64 {
        self.invshare.count(investor, endorsee)
    }

    /// The investment table as of now; later increments do not affect it.
    pub fn investment_snapshot(&self) -> Arc<InvestmentTable> {
        Arc::clone(&self.invshare)
    }

    pub fn record_investment(&mut self, investor: ReviewerId, endorsee: ReviewerId) {
        Arc::make_mut(&mut self.invshare).increment(investor, endorsee);
    }

    /// SHA-256 over the bit patterns of every entry; equal fingerprints mean
    /// bit-identical ledgers.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut buf = Vec::new();
        for id in self.reviewers() {
            buf.extend_from_slice(&id.0.to_be_bytes());
        }
        for (area, table) in &self.expertise {
            buf.extend_from_slice(&area.0.to_be_bytes());
            for id in self.reviewers() {
                let v = table.get(id.0 as usize).copied().unwrap_or_else(T::zero);
                v.write_be(&mut buf);
            }
        }
        for (i, e, n) in self.invshare.entries() {
            buf.extend_from_slice(&i.0.to_be_bytes());
            buf.extend_from_slice(&e.0.to_be_bytes());
            buf.extend_from_slice(&n.to_be_bytes());
        }
        let mut out = [0u8; 32];
        out.copy_from_slice(&Sha256::digest(&buf));
        out
    }
}
