use std::collections::BTreeMap;
use std::sync::Arc;

use crate::ids::{AreaId, AssetId, ReviewerId, RoundId};
use crate::ledger::InvestmentTable;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AssetState {
    Submitted,
    UnderAdmission,
    Rejected,
    Listed,
    Sold,
    Settled,
}

impl std::fmt::Display for AssetState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

/// Public face of an asset. Hidden intrinsic traits live with the agents
/// layer and never reach the protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetRecord<T> {
    pub id: AssetId,
    /// Ascending and deduplicated once accepted by the engine.
    pub area_tags: Vec<AreaId>,
    pub entry_fee: T,
    pub state: AssetState,
}

impl<T: Scalar> AssetRecord<T> {
    pub fn new(id: AssetId, area_tags: impl IntoIterator<Item = AreaId>, entry_fee: T) -> Self {
        Self {
            id,
            area_tags: area_tags.into_iter().collect(),
            entry_fee,
            state: AssetState::Submitted,
        }
    }
}

/// One asset's pass through admission, listing and settlement.
#[derive(Debug, Clone)]
pub struct RoundState<T> {
    pub(crate) id: RoundId,
    pub(crate) asset: AssetRecord<T>,
    /// Union of the area expert sets at submission, ascending.
    pub(crate) experts: Vec<ReviewerId>,
    /// Each area's expert set at submission, ascending. Only these confer
    /// endorsement gains in that area.
    pub(crate) area_experts: BTreeMap<AreaId, Vec<ReviewerId>>,
    /// Expertise tables of the asset's areas as of submission.
    pub(crate) start_expertise: BTreeMap<AreaId, Vec<T>>,
    /// Dropped once settlement has used it.
    pub(crate) investments: Option<Arc<InvestmentTable>>,
    pub(crate) ratings: BTreeMap<ReviewerId, T>,
    pub(crate) rbar: Option<T>,
    pub(crate) reviews: BTreeMap<ReviewerId, T>,
    pub(crate) predictions: BTreeMap<ReviewerId, T>,
    pub(crate) endorsements: BTreeMap<ReviewerId, ReviewerId>,
    pub(crate) observed_demand: Option<T>,
}

impl<T: Scalar> RoundState<T> {
    pub fn id(&self) -> RoundId {
        self.id
    }

    pub fn asset(&self) -> &AssetRecord<T> {
        &self.asset
    }

    pub fn state(&self) -> AssetState {
        self.asset.state
    }

    pub fn experts(&self) -> &[ReviewerId] {
        &self.experts
    }

    pub fn is_assigned(&self, id: ReviewerId) -> bool {
        self.experts.binary_search(&id).is_ok()
    }

    /// Whether `id` was an expert of `area` when the asset was submitted.
    pub fn is_area_expert(&self, id: ReviewerId, area: AreaId) -> bool {
        self.area_experts.get(&area).is_some_and(|v| v.binary_search(&id).is_ok())
    }

    pub fn ratings(&self) -> &BTreeMap<ReviewerId, T> {
        &self.ratings
    }

    pub fn rbar(&self) -> Option<T> {
        self.rbar
    }

    pub fn reviews(&self) -> &BTreeMap<ReviewerId, T> {
        &self.reviews
    }

    pub fn predictions(&self) -> &BTreeMap<ReviewerId, T> {
        &self.predictions
    }

    pub fn endorsements(&self) -> &BTreeMap<ReviewerId, ReviewerId> {
        &self.endorsements
    }

    pub fn observed_demand(&self) -> Option<T> {
        self.observed_demand
    }

    /// Round-start expertise of `id` in one of the asset's areas.
    pub fn start_expertise(&self, id: ReviewerId, area: AreaId) -> T {
        self.start_expertise
            .get(&area)
            .and_then(|t| t.get(id.0 as usize))
            .copied()
            .unwrap_or_else(T::zero)
    }

    /// Rating weight: round-start expertise summed over the asset's areas.
    pub fn start_weight(&self, id: ReviewerId) -> T {
        self.asset.area_tags.iter().map(|&a| self.start_expertise(id, a)).sum()
    }
}

/// Sales listing order: descending `rbar`, ties by ascending asset id.
pub fn listing_order<T: Scalar>(listed: &[(AssetId, T)]) -> Vec<AssetId> {
    let mut v = listed.to_vec();
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("rbar is never NaN").then(a.0.cmp(&b.0)));
    v.into_iter().map(|(id, _)| id).collect()
}
