//! Incentive math checked against naive reference implementations, plus the
//! algebraic properties of each formula.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use reviewnet_core::incentives::{
    addgain, distribute_prediction_pool, dividends, endorsement_gain, for_each_dividend,
    mingain, prediction_error, prediction_pool, prediction_shares, system_error,
    weighted_mean_rating, InvestorRow,
};
use reviewnet_core::{AreaId, ExpertiseLedger, IncentiveParams, ReviewerId};

const REL: f64 = 1e-12;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

fn params(alpha: f64, beta: f64, c1: f64, c2: f64) -> IncentiveParams<f64> {
    IncentiveParams { alpha, beta, c1, c2, ..IncentiveParams::default() }
}

// Reference implementations: straight transcriptions, no shared helpers.

fn ref_gain(exp_e: f64, exp_r: f64, alpha: f64, beta: f64) -> f64 {
    let gap = if exp_e > exp_r { exp_e - exp_r } else { 0.0 };
    alpha * exp_e + beta * gap
}

fn ref_dividends(
    delta: f64,
    endorser: u32,
    snapshot: &BTreeMap<u32, u64>,
    c1: f64,
) -> BTreeMap<u32, f64> {
    let mut denom = 0u64;
    for v in snapshot.values() {
        denom += v;
    }
    let mut out = BTreeMap::new();
    if denom == 0 {
        return out;
    }
    for (&i, &n) in snapshot {
        if i != endorser && n > 0 {
            out.insert(i, c1 * delta * n as f64 / denom as f64);
        }
    }
    out
}

fn ref_system_error(pairs: &[(f64, f64)]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for &(e, x) in pairs {
        num += e * x * x;
        den += x * x;
    }
    num / den
}

fn ref_shares(errors: &[(u32, f64)], eps: f64, c2: f64) -> BTreeMap<u32, f64> {
    let mut out = BTreeMap::new();
    for &(id, e) in errors {
        if e < eps {
            out.insert(id, 1.0 / if e > c2 { e } else { c2 });
        }
    }
    out
}

fn row(snapshot: &BTreeMap<u32, u64>) -> InvestorRow {
    InvestorRow::from_counts(snapshot.iter().map(|(&i, &n)| (ReviewerId(i), n)))
}

fn snapshot_strategy() -> impl Strategy<Value = BTreeMap<u32, u64>> {
    prop::collection::btree_map(0u32..10, 0u64..20, 0..10)
}

fn errors_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..=1.0, 0.0f64..1e6), 1..10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gain_matches_reference(exp_e in 0.0f64..1e7, exp_r in 0.0f64..1e7,
                              alpha in 0.0f64..0.1, beta in 0.0f64..0.1) {
        let p = params(alpha, beta, 0.5, 1e-3);
        let got = endorsement_gain(exp_e, exp_r, &p).unwrap();
        prop_assert!(close(got, ref_gain(exp_e, exp_r, alpha, beta), REL));
        prop_assert!(got >= mingain(exp_e, &p).unwrap());
    }

    #[test]
    fn gain_is_monotone(a in 0.0f64..1e6, b in 0.0f64..1e6, r in 0.0f64..1e6) {
        let p = IncentiveParams::<f64>::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(endorsement_gain(lo, r, &p).unwrap() <= endorsement_gain(hi, r, &p).unwrap());
        prop_assert!(endorsement_gain(r, lo, &p).unwrap() >= endorsement_gain(r, hi, &p).unwrap());
    }

    #[test]
    fn dividends_match_reference(delta in 0.0f64..1e4, endorser in 0u32..12,
                                 snap in snapshot_strategy(), c1 in 0.01f64..2.0) {
        let p = params(0.001, 0.001, c1, 1e-3);
        let got: BTreeMap<u32, f64> = dividends(delta, ReviewerId(endorser), &row(&snap), &p)
            .unwrap()
            .into_iter()
            .map(|(id, v)| (id.0, v))
            .collect();
        let want: BTreeMap<u32, f64> =
            ref_dividends(delta, endorser, &snap, c1).into_iter().filter(|&(_, v)| v > 0.0).collect();
        prop_assert_eq!(got.keys().collect::<Vec<_>>(), want.keys().collect::<Vec<_>>());
        for (k, v) in &want {
            prop_assert!(close(got[k], *v, REL));
        }
    }

    #[test]
    fn dividends_never_exceed_c1_delta(delta in 0.0f64..1e4, endorser in 0u32..12,
                                       snap in snapshot_strategy()) {
        let p = IncentiveParams::<f64>::default();
        let paid: f64 = dividends(delta, ReviewerId(endorser), &row(&snap), &p)
            .unwrap().iter().map(|&(_, v)| v).sum();
        let cap = p.c1 * delta;
        prop_assert!(paid <= cap * (1.0 + 1e-12));
        let endorser_share = snap.get(&endorser).copied().unwrap_or(0);
        let total: u64 = snap.values().sum();
        if total > 0 && endorser_share == 0 {
            prop_assert!(close(paid, cap, 1e-12));
        }
    }

    #[test]
    fn aggregated_dividends_equal_per_endorsement_sums(
        snap in snapshot_strategy(),
        endorsements in prop::collection::vec((0u32..12, 0.0f64..500.0), 1..8),
    ) {
        // One endorser endorses at most once per round.
        let mut by: BTreeMap<u32, f64> = BTreeMap::new();
        for (e, d) in endorsements {
            by.insert(e, d);
        }
        let c1 = 0.5;
        let mut want: BTreeMap<u32, f64> = BTreeMap::new();
        for (&e, &d) in &by {
            for (i, v) in ref_dividends(d, e, &snap, c1) {
                *want.entry(i).or_default() += v;
            }
        }
        let by_vec: Vec<(ReviewerId, f64)> = by.iter().map(|(&e, &d)| (ReviewerId(e), d)).collect();
        let total: f64 = by.values().sum();
        let mut got: BTreeMap<u32, f64> = BTreeMap::new();
        for_each_dividend(total, &by_vec, &row(&snap), c1, |i, v| { got.insert(i.0, v); });
        for (k, v) in &want {
            if *v > 0.0 {
                // Summation order differs, so allow a few ulps of cancellation.
                prop_assert!(close(*got.get(k).unwrap_or(&0.0), *v, 1e-9), "{} {:?} {:?}", k, got, want);
            }
        }
        for k in got.keys() {
            prop_assert!(want.get(k).copied().unwrap_or(0.0) > 0.0);
        }
    }

    #[test]
    fn system_error_matches_reference(pairs in errors_strategy()) {
        prop_assume!(pairs.iter().any(|&(_, x)| x > 0.0));
        let got = system_error(&pairs).unwrap();
        prop_assert!(close(got, ref_system_error(&pairs), REL));
    }

    #[test]
    fn system_error_bounds_and_scale_invariance(
        pairs in prop::collection::vec((0.0f64..=1.0, 1e-3f64..1e6), 1..10),
        scale in 1e-3f64..1e3,
    ) {
        let eps = system_error(&pairs).unwrap();
        let lo = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(eps >= lo * (1.0 - 1e-12) && eps <= hi * (1.0 + 1e-12));
        let scaled: Vec<(f64, f64)> = pairs.iter().map(|&(e, x)| (e, x * scale)).collect();
        prop_assert!(close(system_error(&scaled).unwrap(), eps, 1e-12));
    }

    #[test]
    fn shares_match_reference(errors in prop::collection::vec(0.0f64..=1.0, 1..10),
                              eps in 0.0f64..=1.0, c2 in 1e-5f64..0.1) {
        let errors: Vec<(u32, f64)> = errors.into_iter().enumerate().map(|(i, e)| (i as u32, e)).collect();
        let p = params(0.001, 0.001, 0.5, c2);
        let ids: Vec<(ReviewerId, f64)> = errors.iter().map(|&(i, e)| (ReviewerId(i), e)).collect();
        let got: BTreeMap<u32, f64> =
            prediction_shares(&ids, eps, &p).into_iter().map(|(i, s)| (i.0, s)).collect();
        let want = ref_shares(&errors, eps, c2);
        prop_assert_eq!(got.len(), want.len());
        for (k, v) in &want {
            prop_assert!(close(got[k], *v, REL));
            prop_assert!(got[k] <= 1.0 / c2 * (1.0 + 1e-15));
        }
        for &(i, e) in &errors {
            if e >= eps {
                prop_assert!(!got.contains_key(&i));
            }
        }
        for &(i, ei) in &errors {
            for &(j, ej) in &errors {
                if ei <= ej && got.contains_key(&i) && got.contains_key(&j) {
                    prop_assert!(got[&i] >= got[&j]);
                }
            }
        }
    }

    #[test]
    fn pool_is_conserved(errors in prop::collection::vec((0.0f64..=1.0, 1.0f64..1e6), 2..10),
                         demand in 0.0f64..=1.0, w in 0.0f64..=1.0) {
        let mut p = IncentiveParams::<f64>::default();
        p.w_predict = w;
        p.w_endorse = 1.0 - w;
        let errs: Vec<(ReviewerId, f64)> = errors.iter().enumerate()
            .map(|(i, &(pred, _))| (ReviewerId(i as u32), prediction_error(demand, pred))).collect();
        let weighted: Vec<(f64, f64)> = errs.iter().zip(&errors).map(|(&(_, e), &(_, x))| (e, x)).collect();
        let eps = system_error(&weighted).unwrap();
        let shares = prediction_shares(&errs, eps, &p);
        let paid = distribute_prediction_pool(&shares, eps, &p);
        let pool = prediction_pool(eps, &p);
        if !shares.is_empty() && pool > 0.0 {
            let sum: f64 = paid.iter().map(|&(_, v)| v).sum();
            prop_assert!(close(sum, pool, 1e-9));
            let share_sum: f64 = shares.iter().map(|&(_, s)| s).sum();
            for (&(id, s), &(pid, v)) in shares.iter().zip(&paid) {
                prop_assert_eq!(id, pid);
                prop_assert!(close(v, pool * s / share_sum, REL));
            }
        } else {
            prop_assert!(paid.is_empty());
        }
    }

    #[test]
    fn weighted_mean_stays_in_range(ratings in prop::collection::vec((0.0f64..=1.0, 0.0f64..1e6), 1..20)) {
        prop_assume!(ratings.iter().any(|&(_, w)| w > 0.0));
        let r = weighted_mean_rating(&ratings).unwrap();
        let num: f64 = ratings.iter().map(|&(r, w)| r * w).sum();
        let den: f64 = ratings.iter().map(|&(_, w)| w).sum();
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert!(close(r, (num / den).clamp(0.0, 1.0), 1e-12));
    }

    #[test]
    fn select_experts_matches_full_sort(values in prop::collection::vec(0u8..6, 1..40), k in 1usize..50) {
        let area = AreaId(0);
        let mut ledger = ExpertiseLedger::<f64>::new([area]).unwrap();
        for (i, &v) in values.iter().enumerate() {
            ledger.register(ReviewerId(i as u32)).unwrap();
            ledger.set_expertise(ReviewerId(i as u32), area, v as f64).unwrap();
        }
        let mut want: Vec<(u32, u8)> = values.iter().enumerate().map(|(i, &v)| (i as u32, v)).collect();
        want.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let want: Vec<ReviewerId> = want.into_iter().take(k).map(|(i, _)| ReviewerId(i)).collect();
        let got = ledger.select_experts(area, k);
        prop_assert_eq!(&got, &want);
        prop_assert_eq!(ledger.select_experts(area, k), got);
    }

    #[test]
    fn ledger_stays_nonnegative(ops in prop::collection::vec((0u32..8, 0.0f64..1e3, any::<bool>(), 0u8..8), 1..60),
                                burn in 0.01f64..=1.0) {
        let area = AreaId(1);
        let mut ledger = ExpertiseLedger::<f64>::new([area]).unwrap();
        for i in 0..8 {
            ledger.register(ReviewerId(i)).unwrap();
        }
        let mut p = IncentiveParams::<f64>::default();
        p.burn_fraction = burn;
        for (id, amount, is_burn, nvotes) in ops {
            if is_burn {
                let experts: BTreeSet<ReviewerId> = ledger.select_experts(area, 5).into_iter().collect();
                let votes: BTreeSet<ReviewerId> = experts.iter().copied().take(nvotes as usize).collect();
                ledger.burn_expertise(ReviewerId(id), &votes, &experts, area, &p).unwrap();
            } else {
                ledger.credit(ReviewerId(id), area, amount).unwrap();
            }
            for r in 0..8 {
                prop_assert!(ledger.expertise(ReviewerId(r), area) >= 0.0);
            }
        }
    }
}

#[test]
fn negative_inputs_are_rejected() {
    let p = IncentiveParams::<f64>::default();
    assert!(mingain(-1.0, &p).is_err());
    assert!(addgain(-1.0, &p).is_err());
    assert!(endorsement_gain(1.0, -1.0, &p).is_err());
    assert!(dividends(-1.0, ReviewerId(0), &InvestorRow::default(), &p).is_err());
}

#[test]
fn f32_instantiation_agrees_with_f64() {
    let p32 = IncentiveParams::<f32>::default();
    let p64 = IncentiveParams::<f64>::default();
    let g32 = endorsement_gain(100_000f32, 0.0, &p32).unwrap();
    let g64 = endorsement_gain(100_000f64, 0.0, &p64).unwrap();
    assert!((g32 as f64 - g64).abs() < 1e-3);
    let e32 = system_error(&[(0.0f32, 1.0), (0.3, 2.0)]).unwrap();
    assert!((e32 - 0.24).abs() < 1e-6);
}
