//! Pure incentive mathematics: endorsement gains, investment dividends,
//! admission rating, prediction errors and prediction reward shares.
//!
//! Every function is a pure map from its arguments. Collections keyed by
//! reviewer are slices of `(ReviewerId, value)` pairs in ascending id order,
//! which is also the order of every floating-point accumulation.

use std::collections::BTreeMap;

use crate::error::CoreError;
use crate::ids::ReviewerId;
use crate::params::IncentiveParams;
use crate::scalar::Scalar;

fn check_nonneg<T: Scalar>(name: &'static str, v: T) -> Result<(), CoreError> {
    if v.is_finite() && v >= T::zero() {
        Ok(())
    } else {
        Err(CoreError::Negative { name, value: v.to_f64().unwrap_or(f64::NAN) })
    }
}

fn check_unit<T: Scalar>(name: &'static str, v: T) -> Result<(), CoreError> {
    if v >= T::zero() && v <= T::one() {
        Ok(())
    } else {
        Err(CoreError::OutOfUnitRange { name, value: v.to_f64().unwrap_or(f64::NAN) })
    }
}

/// Minimum gain conferred by an endorser holding `exp_e` expertise: `alpha * exp_e`.
pub fn mingain<T: Scalar>(exp_e: T, params: &IncentiveParams<T>) -> Result<T, CoreError> {
    check_nonneg("endorser expertise", exp_e)?;
    Ok(params.alpha * exp_e)
}

/// Additional gain for an expertise gap of `diff`: `beta * diff`.
pub fn addgain<T: Scalar>(diff: T, params: &IncentiveParams<T>) -> Result<T, CoreError> {
    check_nonneg("expertise gap", diff)?;
    Ok(params.beta * diff)
}

/// Expertise gained by an endorsee holding `exp_r` when endorsed by someone
/// holding `exp_e`: `mingain(exp_e) + addgain(max(0, exp_e - exp_r))`.
pub fn endorsement_gain<T: Scalar>(
    exp_e: T,
    exp_r: T,
    params: &IncentiveParams<T>,
) -> Result<T, CoreError> {
    check_nonneg("endorsee expertise", exp_r)?;
    let base = mingain(exp_e, params)?;
    let gap = (exp_e - exp_r).max(T::zero());
    Ok(base + addgain(gap, params)?)
}

/// The investors of one endorsee with their cumulative endorsement counts,
/// ascending by investor id, plus the precomputed total.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvestorRow {
    investors: Vec<(ReviewerId, u64)>,
    total: u64,
}

impl InvestorRow {
    pub(crate) const EMPTY: InvestorRow = InvestorRow { investors: Vec::new(), total: 0 };

    pub fn from_counts(counts: impl IntoIterator<Item = (ReviewerId, u64)>) -> Self {
        let mut merged: BTreeMap<ReviewerId, u64> = BTreeMap::new();
        for (id, n) in counts {
            if n > 0 {
                *merged.entry(id).or_default() += n;
            }
        }
        let investors: Vec<_> = merged.into_iter().collect();
        let total = investors.iter().map(|&(_, n)| n).sum();
        Self { investors, total }
    }

    pub fn investors(&self) -> &[(ReviewerId, u64)] {
        &self.investors
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, investor: ReviewerId) -> u64 {
        self.investors
            .binary_search_by_key(&investor, |&(id, _)| id)
            .map(|i| self.investors[i].1)
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub(crate) fn increment(&mut self, investor: ReviewerId) {
        match self.investors.binary_search_by_key(&investor, |&(id, _)| id) {
            Ok(i) => self.investors[i].1 += 1,
            Err(i) => self.investors.insert(i, (investor, 1)),
        }
        self.total += 1;
    }
}

/// Dividends paid to prior investors when their endorsee gains `delta` from
/// an endorsement by `endorser`.
///
/// Investor `i` receives `c1 * delta * share_i / total`, where the total runs
/// over every investor including the endorser. The endorser's own slice is
/// not paid out.
pub fn dividends<T: Scalar>(
    delta: T,
    endorser: ReviewerId,
    row: &InvestorRow,
    params: &IncentiveParams<T>,
) -> Result<Vec<(ReviewerId, T)>, CoreError> {
    check_nonneg("delta", delta)?;
    let mut out = Vec::with_capacity(row.investors.len());
    for_each_dividend(delta, &[(endorser, delta)], row, params.c1, |id, amount| {
        out.push((id, amount))
    });
    Ok(out)
}

/// Sum of the per-endorsement dividends of every endorsement an endorsee
/// received in one settlement.
///
/// `total_delta` is the sum of the endorsee's gains and `by_endorser` lists
/// each endorser with the gain their endorsement conferred, so investor `i`
/// receives `c1 * (total_delta - delta_from_i) * share_i / total`. Calls
/// `emit` in ascending investor order, skipping zero payouts.
pub fn for_each_dividend<T: Scalar>(
    total_delta: T,
    by_endorser: &[(ReviewerId, T)],
    row: &InvestorRow,
    c1: T,
    mut emit: impl FnMut(ReviewerId, T),
) {
    if row.total == 0 || total_delta <= T::zero() {
        return;
    }
    let denom = T::from_u64(row.total).expect("investment total fits scalar");
    for &(investor, count) in &row.investors {
        let own: T = by_endorser
            .iter()
            .filter(|&&(e, _)| e == investor)
            .map(|&(_, d)| d)
            .sum();
        let base = total_delta - own;
        if base <= T::zero() {
            continue;
        }
        let n = T::from_u64(count).expect("investment count fits scalar");
        let amount = c1 * base * n / denom;
        if amount > T::zero() {
            emit(investor, amount);
        }
    }
}

/// Expertise-weighted mean of admission ratings.
pub fn weighted_mean_rating<T: Scalar>(ratings: &[(T, T)]) -> Result<T, CoreError> {
    if ratings.is_empty() {
        return Err(CoreError::Degenerate("no ratings to average"));
    }
    let mut num = T::zero();
    let mut den = T::zero();
    for &(r, w) in ratings {
        check_unit("rating", r)?;
        check_nonneg("rating weight", w)?;
        num = num + r * w;
        den = den + w;
    }
    if den <= T::zero() {
        return Err(CoreError::Degenerate("all rating weights are zero"));
    }
    // Rounding can push the quotient a hair past the range of its inputs.
    Ok((num / den).max(T::zero()).min(T::one()))
}

/// Admission decision: inclusive at the threshold.
pub fn admit<T: Scalar>(rbar: T, thresh: T) -> bool {
    rbar >= thresh
}

/// Squared error of a demand prediction.
pub fn prediction_error<T: Scalar>(demand: T, prediction: T) -> T {
    let d = demand - prediction;
    d * d
}

/// System-wide prediction error: the mean of individual errors weighted by
/// squared expertise.
pub fn system_error<T: Scalar>(errors_and_expertise: &[(T, T)]) -> Result<T, CoreError> {
    if errors_and_expertise.is_empty() {
        return Err(CoreError::Degenerate("no predictions"));
    }
    let mut num = T::zero();
    let mut den = T::zero();
    for &(err, exp) in errors_and_expertise {
        check_nonneg("prediction error", err)?;
        check_nonneg("predictor expertise", exp)?;
        let w = exp * exp;
        num = num + err * w;
        den = den + w;
    }
    if den <= T::zero() {
        return Err(CoreError::Degenerate("all predictors have zero expertise"));
    }
    Ok(num / den)
}

/// Reward shares: zero for errors at or above `eps`, otherwise
/// `1 / max(c2, error)`. Zero shares are omitted.
pub fn prediction_shares<T: Scalar>(
    errors: &[(ReviewerId, T)],
    eps: T,
    params: &IncentiveParams<T>,
) -> Vec<(ReviewerId, T)> {
    errors
        .iter()
        .filter(|&&(_, err)| err < eps)
        .map(|&(id, err)| (id, T::one() / params.c2.max(err)))
        .collect()
}

/// Splits the prediction pool `pool_scale * eps * w_predict` proportionally to shares.
pub fn distribute_prediction_pool<T: Scalar>(
    shares: &[(ReviewerId, T)],
    eps: T,
    params: &IncentiveParams<T>,
) -> Vec<(ReviewerId, T)> {
    let pool = prediction_pool(eps, params);
    let total: T = shares.iter().map(|&(_, s)| s).sum();
    if pool <= T::zero() || total <= T::zero() {
        return Vec::new();
    }
    shares
        .iter()
        .map(|&(id, s)| (id, pool * s / total))
        .filter(|&(_, amount)| amount > T::zero())
        .collect()
}

pub fn prediction_pool<T: Scalar>(eps: T, params: &IncentiveParams<T>) -> T {
    params.pool_scale * eps * params.w_predict
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> IncentiveParams<f64> {
        IncentiveParams::default()
    }

    fn id(n: u32) -> ReviewerId {
        ReviewerId(n)
    }

    #[test]
    fn gain_functions() {
        assert_eq!(mingain(0.0, &p()).unwrap(), 0.0);
        assert_eq!(addgain(0.0, &p()).unwrap(), 0.0);
        assert!((mingain(100_000.0, &p()).unwrap() - 100.0).abs() < 1e-9);
        assert!(mingain(-1.0, &p()).is_err());
        assert!(addgain(-1.0, &p()).is_err());
    }

    #[test]
    fn endorsement_gain_examples() {
        assert_eq!(endorsement_gain(0.0, 0.0, &p()).unwrap(), 0.0);
        assert!((endorsement_gain(100_000.0, 100_000.0, &p()).unwrap() - 100.0).abs() < 1e-9);
        assert!((endorsement_gain(100_000.0, 0.0, &p()).unwrap() - 200.0).abs() < 1e-9);
        // Endorsee richer than the endorser only receives the minimum.
        assert!((endorsement_gain(100.0, 1e6, &p()).unwrap() - 0.1).abs() < 1e-12);
        assert!(endorsement_gain(1.0, -1.0, &p()).is_err());
    }

    #[test]
    fn dividend_examples() {
        let params = IncentiveParams { c1: 0.5, ..p() };
        let empty = InvestorRow::default();
        assert!(dividends(100.0, id(2), &empty, &params).unwrap().is_empty());

        let row = InvestorRow::from_counts([(id(0), 3), (id(1), 1)]);
        let paid = dividends(100.0, id(2), &row, &params).unwrap();
        assert_eq!(paid, vec![(id(0), 37.5), (id(1), 12.5)]);

        // The endorser's slice is forfeited; the denominator keeps it.
        let paid = dividends(100.0, id(0), &row, &params).unwrap();
        assert_eq!(paid, vec![(id(1), 12.5)]);
    }

    #[test]
    fn aggregated_dividends_skip_only_the_investors_own_endorsements() {
        let row = InvestorRow::from_counts([(id(0), 1), (id(1), 1)]);
        let mut paid = Vec::new();
        // id(0) endorsed for 30 and id(5) for 70.
        for_each_dividend(100.0, &[(id(0), 30.0), (id(5), 70.0)], &row, 1.0, |i, a| {
            paid.push((i, a))
        });
        assert_eq!(paid, vec![(id(0), 35.0), (id(1), 50.0)]);
    }

    #[test]
    fn weighted_mean_examples() {
        assert!((weighted_mean_rating(&[(0.8f64, 2.0), (0.8, 7.0)]).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(weighted_mean_rating(&[(1.0, 3.0), (0.0, 1.0)]).unwrap(), 0.75);
        assert!((weighted_mean_rating(&[(0.2f64, 1.0), (0.6, 1.0), (1.0, 1.0)]).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(
            weighted_mean_rating(&[(0.5, 0.0), (0.1, 0.0)]),
            Err(CoreError::Degenerate("all rating weights are zero"))
        );
        assert!(weighted_mean_rating::<f64>(&[]).is_err());
        assert!(weighted_mean_rating(&[(1.5, 1.0)]).is_err());
    }

    #[test]
    fn admission_threshold_is_inclusive() {
        assert!(admit(0.5, 0.5));
        assert!(!admit(0.49, 0.5));
        assert!(admit(1.0, 0.0));
    }

    #[test]
    fn prediction_error_examples() {
        assert_eq!(prediction_error(0.7, 0.7), 0.0);
        assert_eq!(prediction_error(1.0, 0.0), 1.0);
        assert!((prediction_error(0.6f64, 0.35) - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn system_error_examples() {
        assert!((system_error(&[(0.1f64, 3.0), (0.1, 9.0)]).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(system_error(&[(0.04, 100.0), (0.25, 0.0)]).unwrap(), 0.04);
        assert!((system_error(&[(0.0f64, 1.0), (0.3, 2.0)]).unwrap() - 0.24).abs() < 1e-15);
        assert!(system_error(&[(0.3, 0.0)]).is_err());
        assert!(system_error::<f64>(&[]).is_err());
    }

    #[test]
    fn share_examples() {
        let params = IncentiveParams { c2: 1e-4, ..p() };
        assert!(prediction_shares(&[(id(0), 0.1)], 0.1, &params).is_empty());
        let s = prediction_shares(&[(id(0), 0.0)], 0.1, &params);
        assert!((s[0].1 - 10_000.0).abs() < 1e-9);
        let s = prediction_shares(&[(id(0), 0.04)], 0.1, &params);
        assert!((s[0].1 - 25.0).abs() < 1e-12);
    }

    #[test]
    fn pool_examples() {
        // pool_scale * eps * w_predict = 100
        let params = IncentiveParams { pool_scale: 1000.0, w_endorse: 0.0, w_predict: 1.0, ..p() };
        assert!(distribute_prediction_pool(&[], 0.1, &params).is_empty());
        let paid = distribute_prediction_pool(&[(id(0), 3.0), (id(1), 1.0)], 0.1, &params);
        assert!((paid[0].1 - 75.0).abs() < 1e-9 && (paid[1].1 - 25.0).abs() < 1e-9);
        assert!(distribute_prediction_pool(&[(id(0), 3.0)], 0.0, &params).is_empty());
    }
}
