use proptest::prelude::*;
use reviewnet_core::{ReviewerId, Slope};
use reviewnet_sim::experiments::*;
use reviewnet_sim::io::{read_runs, summarize, write_aggregate, write_runs};
use reviewnet_sim::{ReviewerProfile, SimConfig, Strategy};

fn small(rounds: usize) -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.simulation.n_reviewers = 80;
    cfg.simulation.k_experts = 10;
    cfg.simulation.n_rounds = rounds;
    cfg
}

fn quiet(_: usize, _: usize) {}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    for (rank, i) in idx.into_iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

fn population(traits: &[(f64, f64)]) -> Vec<ReviewerProfile> {
    traits
        .iter()
        .enumerate()
        .map(|(i, &(qea, pdpa))| ReviewerProfile { id: ReviewerId(i as u32), qea, pdpa, strategy: Strategy::Honest })
        .collect()
}

proptest! {
    /// Swapping the two traits and the two channel weights selects the same set.
    #[test]
    fn ideal_set_is_symmetric_in_traits(
        traits in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..60),
        k_raw in 1usize..60,
        slope in -20.0f64..=0.0,
    ) {
        let k = k_raw.min(traits.len());
        let (we, wp) = slope_weights(Slope::Finite(slope)).unwrap();
        let swapped: Vec<(f64, f64)> = traits.iter().map(|&(q, p)| (p, q)).collect();
        let a = ideal_expert_set(&population(&traits), k, (we, wp));
        let b = ideal_expert_set(&population(&swapped), k, (wp, we));
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), k);
        // Every member scores at least as well as every non-member.
        let score = |id: ReviewerId| we * traits[id.0 as usize].0 + wp * traits[id.0 as usize].1;
        let worst_in = a.iter().map(|&id| score(id)).fold(f64::INFINITY, f64::min);
        for i in 0..traits.len() as u32 {
            if !a.contains(&ReviewerId(i)) {
                prop_assert!(score(ReviewerId(i)) <= worst_in);
            }
        }
    }
}

#[test]
fn sweep_is_reproducible_and_survives_a_csv_round_trip() {
    let base = small(30);
    let grid = [0.2, 0.6];
    let a = run_min_qea_sweep(&base, &grid, 3, &quiet).unwrap();
    let b = run_min_qea_sweep(&base, &grid, 3, &quiet).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows.len(), 6);

    let mut buf = Vec::new();
    write_runs(&a, &mut buf).unwrap();
    let rows = read_runs(buf.as_slice()).unwrap();
    assert_eq!(rows.len(), a.rows.len());
    let again = summarize(&rows);
    assert_eq!(again.len(), a.settings.len());
    for (x, y) in again.iter().zip(&a.settings) {
        assert_eq!(x.setting, y.setting);
        for (u, v) in [(&x.initial, &y.initial), (&x.ideal, &y.ideal), (&x.actual, &y.actual)] {
            assert!((u.mean - v.mean).abs() < 1e-9 && (u.std - v.std).abs() < 1e-9);
            assert_eq!(u.n, v.n);
        }
    }

    let mut table = Vec::new();
    write_aggregate(&again, &mut table).unwrap();
    let text = String::from_utf8(table).unwrap();
    assert!(text.starts_with("row,0.2,0.6\ninitial,"));
}

#[test]
fn distinct_cells_get_distinct_seeds() {
    let report = run_min_qea_sweep(&small(0), &[0.1, 0.3], 4, &quiet).unwrap();
    let mut seeds: Vec<u64> = report.rows.iter().map(|r| r.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), 8);
}

#[test]
fn initial_score_rises_with_the_minimum() {
    let grid = QEA_GRID;
    let report = run_min_qea_sweep(&small(0), &grid, 2, &quiet).unwrap();
    let initial: Vec<f64> = grid.iter().map(|&x| report.setting(x).unwrap().initial.mean).collect();
    let rho = spearman(&grid, &initial);
    assert!(rho > 0.0, "spearman {rho}");
}

#[test]
fn bad_inputs_are_config_errors() {
    assert!(run_min_qea_sweep(&small(0), &[1.5], 1, &quiet).unwrap_err().is_config());
    assert!(run_min_qea_sweep(&small(0), &[0.5], 0, &quiet).unwrap_err().is_config());
    assert!(tournament_mix(1.0, &None).unwrap_err().is_config());
    let with_honest = Some([(Strategy::Honest, 1.0)].into());
    assert!(tournament_mix(0.5, &with_honest).unwrap_err().is_config());
}

#[test]
fn tournament_mix_sums_to_one() {
    let m = tournament_mix(0.3, &Some([(Strategy::Lazy, 3.0), (Strategy::EndorsePoor, 1.0)].into())).unwrap();
    assert!((m.values().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((m[&Strategy::Lazy] - 0.525).abs() < 1e-12);
}

#[test]
fn tournament_reports_every_assigned_strategy() {
    let report = run_strategy_tournament(&small(20), &[0.5], &None, 2, &quiet).unwrap();
    let s = report.setting(0.5).unwrap();
    assert_eq!(s.strategy_expertise.len(), 5);
    assert!(s.strategy_expertise.values().all(|st| st.n == 2));
}

#[test]
fn modes_share_a_population_and_isolate_channels() {
    let runs = run_convergence_modes(&small(120)).unwrap();
    let names: Vec<&str> = runs.iter().map(|r| r.0).collect();
    assert_eq!(names, ["endorsement-only", "prediction-only", "both-with-arrivals"]);
    let (e, p, both) = (&runs[0].1, &runs[1].1, &runs[2].1);
    assert!(e.series.iter().all(|x| x.pool_paid == 0.0));
    assert!(p.series.iter().all(|x| x.endorsement_paid == 0.0));
    assert_eq!(e.population, p.population);
    assert_eq!(e.population[..], both.population[..e.population.len()]);
    assert_eq!(e.initial_experts, both.initial_experts);
    assert!(both.population.len() > e.population.len());
}
