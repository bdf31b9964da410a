//! Experiment families over many simulations, their metrics and
//! aggregation.

use std::collections::BTreeMap;

use rayon::prelude::*;
use reviewnet_core::{ReviewerId, Slope};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::agents::{ReviewerProfile, Strategy};
use crate::config::{Shortfall, SimConfig};
use crate::error::SimError;
use crate::sim::{run_simulation, SimulationResult};

/// Channel weights `(w_endorse, w_predict)` for a slope.
pub fn slope_weights(slope: Slope<f64>) -> Result<(f64, f64), SimError> {
    slope.weights().map_err(|e| SimError::Config(format!("slope: {e}")))
}

/// Mean of `(qea + pdpa) / 2` over the set.
pub fn combined_score<'a>(
    profiles: impl IntoIterator<Item = &'a ReviewerProfile>,
) -> Result<f64, SimError> {
    let (sum, n) = profiles.into_iter().fold((0.0, 0usize), |(s, n), p| (s + p.combined(), n + 1));
    if n == 0 {
        return Err(SimError::Config("combined score of an empty set".into()));
    }
    Ok(sum / n as f64)
}

/// Top `k` by `w_endorse * qea + w_predict * pdpa`, ties by ascending id.
/// Returned in ascending id order.
pub fn ideal_expert_set(
    population: &[ReviewerProfile],
    k: usize,
    (we, wp): (f64, f64),
) -> Vec<ReviewerId> {
    let mut ranked: Vec<(f64, ReviewerId)> =
        population.iter().map(|p| (we * p.qea + wp * p.pdpa, p.id)).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<ReviewerId> = ranked.into_iter().take(k).map(|x| x.1).collect();
    out.sort_unstable();
    out
}

/// Seed of one run inside an experiment.
pub fn child_seed(base: u64, experiment: &str, grid_index: usize, repetition: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_be_bytes());
    h.update(experiment.as_bytes());
    h.update((grid_index as u64).to_be_bytes());
    h.update((repetition as u64).to_be_bytes());
    let d = h.finalize();
    u64::from_be_bytes(d[..8].try_into().expect("8 bytes"))
}

fn profiles<'a>(r: &'a SimulationResult, ids: &'a [ReviewerId]) -> impl Iterator<Item = &'a ReviewerProfile> {
    ids.iter().map(|&id| r.profile(id))
}

/// Mean final expertise of the initial experts playing each strategy.
/// Strategies with no initial expert are absent.
pub fn strategy_expertise(r: &SimulationResult) -> BTreeMap<Strategy, f64> {
    let mut acc: BTreeMap<Strategy, (f64, usize)> = BTreeMap::new();
    for &id in &r.initial_experts {
        let e = acc.entry(r.profile(id).strategy).or_default();
        e.0 += r.final_expertise(id);
        e.1 += 1;
    }
    acc.into_iter().map(|(s, (sum, n))| (s, sum / n as f64)).collect()
}

/// Metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub setting: f64,
    pub repetition: usize,
    pub seed: u64,
    pub initial_score: f64,
    pub ideal_score: f64,
    pub actual_score: f64,
    pub strategy_expertise: BTreeMap<Strategy, f64>,
}

impl RunRow {
    pub fn from_result(setting: f64, repetition: usize, r: &SimulationResult) -> Result<Self, SimError> {
        let weights = slope_weights(r.config.incentives.slope)?;
        let ideal = ideal_expert_set(&r.population, r.config.simulation.k_experts, weights);
        Ok(Self {
            setting,
            repetition,
            seed: r.config.simulation.seed,
            initial_score: combined_score(profiles(r, &r.initial_experts))?,
            ideal_score: combined_score(profiles(r, &ideal))?,
            actual_score: combined_score(profiles(r, &r.final_experts))?,
            strategy_expertise: strategy_expertise(r),
        })
    }
}

/// Sample mean and standard deviation (n − 1 denominator; 0 for n = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std, n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SettingSummary {
    pub setting: f64,
    pub initial: Stat,
    pub ideal: Stat,
    pub actual: Stat,
    pub strategy_expertise: BTreeMap<Strategy, Stat>,
}

impl SettingSummary {
    pub fn from_rows(setting: f64, rows: &[&RunRow]) -> Self {
        let col = |f: fn(&RunRow) -> f64| Stat::of(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
        let mut by_strategy: BTreeMap<Strategy, Vec<f64>> = BTreeMap::new();
        for r in rows {
            for (s, v) in &r.strategy_expertise {
                by_strategy.entry(*s).or_default().push(*v);
            }
        }
        Self {
            setting,
            initial: col(|r| r.initial_score),
            ideal: col(|r| r.ideal_score),
            actual: col(|r| r.actual_score),
            strategy_expertise: by_strategy.into_iter().map(|(s, v)| (s, Stat::of(&v))).collect(),
        }
    }
}

/// Per-run rows in (grid, repetition) order and their per-setting summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub experiment: String,
    pub repetitions: usize,
    pub rows: Vec<RunRow>,
    pub settings: Vec<SettingSummary>,
}

impl SweepReport {
    pub fn from_rows(experiment: &str, grid: &[f64], repetitions: usize, rows: Vec<RunRow>) -> Self {
        let settings = grid
            .iter()
            .enumerate()
            .map(|(g, &x)| {
                let mine: Vec<&RunRow> =
                    rows[g * repetitions..(g + 1) * repetitions].iter().collect();
                SettingSummary::from_rows(x, &mine)
            })
            .collect();
        Self { experiment: experiment.to_string(), repetitions, rows, settings }
    }

    pub fn setting(&self, x: f64) -> Option<&SettingSummary> {
        self.settings.iter().find(|s| (s.setting - x).abs() < 1e-9)
    }
}

pub const QEA_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const HONEST_FRACTIONS: [f64; 9] = QEA_GRID;

/// Runs every (grid, repetition) cell in parallel and keeps only its row,
/// so memory stays bounded by the number of workers.
fn run_grid(
    experiment: &str,
    grid: &[f64],
    repetitions: usize,
    base_seed: u64,
    configure: impl Fn(f64) -> Result<SimConfig, SimError> + Sync,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<SweepReport, SimError> {
    if repetitions == 0 {
        return Err(SimError::Config("repetitions must be positive".into()));
    }
    let total = grid.len() * repetitions;
    let done = std::sync::atomic::AtomicUsize::new(0);
    let rows = (0..total)
        .into_par_iter()
        .map(|cell| {
            let (g, rep) = (cell / repetitions, cell % repetitions);
            let mut cfg = configure(grid[g])?;
            cfg.simulation.seed = child_seed(base_seed, experiment, g, rep);
            let result = run_simulation(&cfg)?;
            let row = RunRow::from_result(grid[g], rep, &result);
            progress(done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1, total);
            row
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepReport::from_rows(experiment, grid, repetitions, rows))
}

/// Varies the minimum QEA of the initial experts. Settings whose eligible
/// pool is smaller than `k` fall back to filling by QEA.
pub fn run_min_qea_sweep(
    base: &SimConfig,
    grid: &[f64],
    repetitions: usize,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<SweepReport, SimError> {
    if let Some(x) = grid.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(SimError::Config(format!("min-QEA grid value {x} outside [0, 1]")));
    }
    let configure = |x: f64| {
        let mut cfg = base.clone();
        cfg.population.min_initial_qea = x;
        cfg.population.initial_shortfall = Shortfall::FillByQea;
        Ok(cfg)
    };
    run_grid("min-qea-sweep", grid, repetitions, base.simulation.seed, configure, progress)
}

/// Relative shares of the selfish remainder; `None` splits it evenly.
pub type SelfishMix = Option<BTreeMap<Strategy, f64>>;

/// Strategy mix of the initial experts for one honest fraction.
pub fn tournament_mix(honest_fraction: f64, selfish: &SelfishMix) -> Result<BTreeMap<Strategy, f64>, SimError> {
    if !(honest_fraction > 0.0 && honest_fraction < 1.0) {
        return Err(SimError::Config(format!(
            "honest fraction {honest_fraction} outside the open interval (0, 1)"
        )));
    }
    let shares: BTreeMap<Strategy, f64> = match selfish {
        None => Strategy::SELFISH.iter().map(|s| (*s, 1.0)).collect(),
        Some(m) => {
            if m.contains_key(&Strategy::Honest) || m.values().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(SimError::Config("selfish mix: nonnegative shares of selfish strategies only".into()));
            }
            m.clone()
        }
    };
    let total: f64 = shares.values().sum();
    if total <= 0.0 {
        return Err(SimError::Config("selfish mix: shares sum to zero".into()));
    }
    let mut mix: BTreeMap<Strategy, f64> =
        shares.into_iter().map(|(s, v)| (s, (1.0 - honest_fraction) * v / total)).collect();
    mix.insert(Strategy::Honest, honest_fraction);
    Ok(mix)
}

/// Varies the honest share of the initial experts; the rest play selfish
/// endorsement strategies.
pub fn run_strategy_tournament(
    base: &SimConfig,
    honest_fractions: &[f64],
    selfish: &SelfishMix,
    repetitions: usize,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<SweepReport, SimError> {
    for &f in honest_fractions {
        tournament_mix(f, selfish)?;
    }
    let configure = |f: f64| {
        let mut cfg = base.clone();
        cfg.strategy_mix = tournament_mix(f, selfish)?;
        Ok(cfg)
    };
    run_grid("strategy-tournament", honest_fractions, repetitions, base.simulation.seed, configure, progress)
}

/// The three single-run gain modes.
pub const MODES: [(&str, Slope<f64>); 3] = [
    ("endorsement-only", Slope::Finite(0.0)),
    ("prediction-only", Slope::NegInfinity),
    ("both-with-arrivals", Slope::Finite(-1.0)),
];

/// Runs the endorsement-only, prediction-only and combined modes from one
/// seed; only the combined mode admits arrivals.
pub fn run_convergence_modes(base: &SimConfig) -> Result<Vec<(&'static str, SimulationResult)>, SimError> {
    MODES
        .par_iter()
        .map(|&(name, slope)| {
            let mut cfg = base.clone();
            cfg.incentives.slope = slope;
            cfg.market.arrivals = name == "both-with-arrivals";
            run_simulation(&cfg).map(|r| (name, r))
        })
        .collect()
}
