use std::collections::BTreeMap;

use crate::ids::ReviewerId;
use crate::scalar::Scalar;

/// Opaque token accounting: an incentive pool fed by forfeited entry fees
/// and per-reviewer balances paid out of it. Never negative.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenLedger<T> {
    pool: T,
    balances: BTreeMap<ReviewerId, T>,
}

impl<T: Scalar> Default for TokenLedger<T> {
    fn default() -> Self {
        Self { pool: T::zero(), balances: BTreeMap::new() }
    }
}

impl<T: Scalar> TokenLedger<T> {
    pub fn incentive_pool(&self) -> T {
        self.pool
    }

    pub fn balance(&self, id: ReviewerId) -> T {
        self.balances.get(&id).copied().unwrap_or_else(T::zero)
    }

    pub fn balances(&self) -> &BTreeMap<ReviewerId, T> {
        &self.balances
    }

    pub(crate) fn forfeit(&mut self, fee: T) -> T {
        self.pool = self.pool + fee;
        self.pool
    }

    /// Moves `payments` from the pool to balances; the pool is clamped at zero
    /// against rounding in the split.
    pub(crate) fn pay(&mut self, payments: &[(ReviewerId, T)]) -> T {
        for &(id, amount) in payments {
            let slot = self.balances.entry(id).or_insert_with(T::zero);
            *slot = *slot + amount;
            self.pool = self.pool - amount;
        }
        self.pool = self.pool.max(T::zero());
        self.pool
    }
}
