use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reviewnet_core::protocol::{replay, verify_reader, EventSink, LogReader};
use reviewnet_core::{AssetId, ReviewerId, Slope};
use reviewnet_sim::config::Shortfall;
use reviewnet_sim::sim::{
    generate_asset, init_population, observed_demand, pick_initial_experts, strategy_counts, AREA,
};
use reviewnet_sim::{run_simulation, run_simulation_logged, SimConfig, Simulation, Strategy};

fn small(rounds: usize) -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.simulation.n_reviewers = 60;
    cfg.simulation.k_experts = 8;
    cfg.simulation.n_rounds = rounds;
    cfg
}

#[test]
fn zero_spread_population_sits_at_the_mean() {
    let mut cfg = small(0);
    cfg.population.trait_std = 0.0;
    let pop = init_population(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert!(pop.iter().all(|p| p.qea == 0.5 && p.pdpa == 0.5));
}

#[test]
fn population_mean_matches_the_trait_mean() {
    let mut cfg = SimConfig::default();
    cfg.simulation.n_reviewers = 10_000;
    let pop = init_population(&cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let mean = pop.iter().map(|p| p.qea).sum::<f64>() / pop.len() as f64;
    assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    assert!(pop.iter().all(|p| (0.0..=1.0).contains(&p.qea) && (0.0..=1.0).contains(&p.pdpa)));
}

#[test]
fn initial_experts_respect_the_minimum() {
    let mut cfg = SimConfig::default();
    cfg.population.min_initial_qea = 0.6;
    let pop = init_population(&cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let experts = pick_initial_experts(&pop, &cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    assert_eq!(experts.len(), 50);
    assert!(experts.iter().all(|e| pop[e.0 as usize].qea >= 0.6));
    assert!(experts.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn too_few_eligible_reviewers_is_a_config_error() {
    let mut cfg = SimConfig::default();
    cfg.population.min_initial_qea = 0.9;
    let mut pop = init_population(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    for p in &mut pop {
        p.qea = p.qea.min(0.85);
    }
    let err = pick_initial_experts(&pop, &cfg, &mut ChaCha8Rng::seed_from_u64(6)).unwrap_err();
    assert!(err.is_config());

    cfg.population.initial_shortfall = Shortfall::FillByQea;
    let filled = pick_initial_experts(&pop, &cfg, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
    let mut by_qea: Vec<_> = pop.iter().collect();
    by_qea.sort_by(|a, b| b.qea.total_cmp(&a.qea).then(a.id.cmp(&b.id)));
    let mut top: Vec<ReviewerId> = by_qea[..50].iter().map(|p| p.id).collect();
    top.sort_unstable();
    assert_eq!(filled, top);
}

#[test]
fn assets_are_uniform_and_reproducible() {
    let mut a = ChaCha8Rng::seed_from_u64(7);
    let mut b = ChaCha8Rng::seed_from_u64(7);
    let xs: Vec<_> = (0..10_000).map(|i| generate_asset(AssetId(i), &mut a)).collect();
    let ys: Vec<_> = (0..10_000).map(|i| generate_asset(AssetId(i), &mut b)).collect();
    assert_eq!(xs, ys);
    assert!(xs.iter().all(|x| (0.0..=1.0).contains(&x.quality) && (0.0..=1.0).contains(&x.demand)));
    let mean = xs.iter().map(|x| x.quality).sum::<f64>() / xs.len() as f64;
    assert!((mean - 0.5).abs() < 0.02);
}

#[test]
fn sale_noise_moments_and_clamping() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    assert_eq!(observed_demand(0.3, 0.0, &mut rng), 0.3);
    for _ in 0..1000 {
        assert!(observed_demand(1.0, 0.05, &mut rng) <= 1.0);
        assert!(observed_demand(0.0, 0.05, &mut rng) >= 0.0);
    }
    let n = 100_000;
    let xs: Vec<f64> = (0..n).map(|_| observed_demand(0.5, 0.05, &mut rng)).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    assert!((mean - 0.5).abs() < 0.001, "mean {mean}");
    assert!((std - 0.05).abs() < 0.005, "std {std}");
}

#[test]
fn strategy_counts_round_to_k() {
    use std::collections::BTreeMap;
    let mix = BTreeMap::from([(Strategy::Honest, 0.5), (Strategy::Lazy, 0.25), (Strategy::NoEndorsement, 0.25)]);
    let c = strategy_counts(&mix, 10);
    assert_eq!(c.iter().map(|x| x.1).sum::<usize>(), 10);
    assert_eq!(c[0], (Strategy::Honest, 5));
    let all = BTreeMap::from([(Strategy::Honest, 1.0)]);
    assert_eq!(strategy_counts(&all, 7)[0], (Strategy::Honest, 7));
}

#[test]
fn zero_rounds_leave_the_bootstrap_ledger() {
    let r = run_simulation(&small(0)).unwrap();
    assert!(r.series.is_empty());
    for p in &r.population {
        let want = if r.is_initial_expert(p.id) { 100_000.0 } else { 0.0 };
        assert_eq!(r.final_expertise(p.id), want);
    }
    assert_eq!(r.final_experts, r.initial_experts);
}

#[test]
fn runs_are_pure_functions_of_the_config() {
    let cfg = small(40);
    let a = run_simulation(&cfg).unwrap();
    let b = run_simulation(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.series.len(), 40);
    let mut other = cfg.clone();
    other.simulation.seed += 1;
    assert_ne!(run_simulation(&other).unwrap().log_head, a.log_head);
}

#[test]
fn zero_threshold_admits_the_first_asset() {
    let mut cfg = small(20);
    cfg.incentives.thresh = 0.0;
    let r = run_simulation(&cfg).unwrap();
    assert!(r.series.iter().all(|x| x.rejected_before == 0));
    assert!(r.series.iter().enumerate().all(|(i, x)| x.asset == i as u64));
}

#[test]
fn impossible_threshold_is_a_config_error() {
    let mut cfg = small(1);
    cfg.incentives.thresh = 1.0;
    cfg.simulation.max_admission_attempts = 20;
    assert!(run_simulation(&cfg).unwrap_err().is_config());
}

#[test]
fn without_endorsements_only_predictions_pay() {
    let mut cfg = small(30);
    cfg.population.non_expert_strategy = Strategy::NoEndorsement;
    cfg.strategy_mix = [(Strategy::NoEndorsement, 1.0)].into();
    let r = run_simulation(&cfg).unwrap();
    assert!(r.series.iter().all(|x| x.endorsement_paid == 0.0 && x.dividends_paid == 0.0));
    assert!(r.series.iter().any(|x| x.pool_paid > 0.0));
}

#[test]
fn expert_set_size_is_constant() {
    let mut sim = Simulation::new(small(0), EventSink::Null).unwrap();
    for _ in 0..30 {
        sim.step().unwrap();
        assert_eq!(sim.engine().current_experts(AREA).len(), 8);
    }
}

#[test]
fn arrivals_follow_the_schedule() {
    let mut cfg = small(250);
    cfg.market.arrivals = true;
    let r = run_simulation(&cfg).unwrap();
    // Batches after rounds 100 and 200.
    assert_eq!(r.population.len(), 60 + 20);
    assert_eq!(r.series[99].population, 60);
    assert_eq!(r.series[100].population, 70);
    let fresh = &r.population[60..];
    assert!(fresh.iter().enumerate().all(|(i, p)| p.id == ReviewerId(60 + i as u32)));

    // Arrivals draw from their own stream: the first 100 rounds are unchanged.
    let mut quiet = cfg.clone();
    quiet.market.arrivals = false;
    let q = run_simulation(&quiet).unwrap();
    assert_eq!(q.series[..100], r.series[..100]);
    assert_eq!(q.population[..60], r.population[..60]);
}

#[test]
fn full_scale_arrivals_reach_790_reviewers() {
    let mut cfg = SimConfig::default();
    cfg.market.arrivals = true;
    cfg.incentives.slope = Slope::NegInfinity;
    let r = run_simulation(&cfg).unwrap();
    assert_eq!(r.population.len(), 790);
}

#[test]
fn logged_runs_verify_and_replay_to_the_same_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.jsonl");
    let cfg = small(60);
    let file = std::io::BufWriter::new(std::fs::File::create(&path).unwrap());
    let logged = run_simulation_logged(&cfg, EventSink::writer(Box::new(file))).unwrap();
    let silent = run_simulation(&cfg).unwrap();
    assert_eq!(logged, silent);

    let n = verify_reader::<f64>(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(n, logged.log_len);
    let reader = LogReader::<f64, _>::new(std::io::BufReader::new(std::fs::File::open(&path).unwrap()));
    let engine = replay(reader).unwrap();
    assert_eq!(engine.ledger(), &logged.ledger);
    assert_eq!(engine.log().head(), logged.log_head);
}

/// Full-size runs: the expert set's combined score, averaged over
/// consecutive 500-round windows, never drops in most seeds.
///
/// Fails with the calibrated defaults (3 of 10 seeds): the score plateaus
/// after about 1500 rounds and one expert swap moves the set mean by about
/// 0.004, so late windows fluctuate. Kept at full strength and ignored; run
/// with `--ignored` to reproduce.
#[test]
#[ignore = "known failure: late-run plateau fluctuates, see README"]
fn combined_score_rises_window_over_window() {
    let mut monotone = 0;
    let mut trace = Vec::new();
    for seed in 1..=10 {
        let mut cfg = SimConfig::default();
        cfg.simulation.seed = seed;
        cfg.population.min_initial_qea = 0.5;
        let r = run_simulation(&cfg).unwrap();
        let windows: Vec<f64> = r
            .series
            .chunks(500)
            .map(|w| w.iter().map(|x| (x.expert_mean_qea + x.expert_mean_pdpa) / 2.0).sum::<f64>() / w.len() as f64)
            .collect();
        assert_eq!(windows.len(), 6);
        monotone += usize::from(windows.windows(2).all(|p| p[1] >= p[0]));
        trace.push(windows);
    }
    assert!(monotone >= 8, "{monotone}/10 monotone: {trace:?}");
}

#[test]
fn single_channel_modes_isolate_their_channel() {
    let mut cfg = small(40);
    cfg.incentives.slope = Slope::Finite(0.0);
    let r = run_simulation(&cfg).unwrap();
    assert!(r.series.iter().all(|x| x.pool_paid == 0.0));
    cfg.incentives.slope = Slope::NegInfinity;
    let r = run_simulation(&cfg).unwrap();
    assert!(r.series.iter().all(|x| x.endorsement_paid == 0.0 && x.dividends_paid == 0.0));
}
