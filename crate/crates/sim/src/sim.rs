//! The round loop: population, initial experts, assets, agent actions and
//! sales driven through the protocol engine.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use reviewnet_core::ledger::ExpertiseLedger;
use reviewnet_core::protocol::{AssetRecord, Engine, EventSink};
use reviewnet_core::{AreaId, AssetId, IncentiveParams, ReviewerId};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::agents::{
    honest_prediction, honest_review, NoiseParams, ReviewIndex, ReviewerProfile, Strategy,
};
use crate::config::{Shortfall, SimConfig};
use crate::error::SimError;

/// The single marketplace area used by simulations.
pub const AREA: AreaId = AreaId(0);

/// Independent random stream for one concern of a run.
pub fn stream(seed: u64, label: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_be_bytes());
    h.update(label.as_bytes());
    let mut key = [0u8; 32];
    key.copy_from_slice(&h.finalize());
    ChaCha8Rng::from_seed(key)
}

struct Streams {
    population: ChaCha8Rng,
    experts: ChaCha8Rng,
    assets: ChaCha8Rng,
    ratings: ChaCha8Rng,
    reviews: ChaCha8Rng,
    predictions: ChaCha8Rng,
    endorsements: ChaCha8Rng,
    sale: ChaCha8Rng,
    arrivals: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        Self {
            population: stream(seed, "population"),
            experts: stream(seed, "experts"),
            assets: stream(seed, "assets"),
            ratings: stream(seed, "ratings"),
            reviews: stream(seed, "reviews"),
            predictions: stream(seed, "predictions"),
            endorsements: stream(seed, "endorsements"),
            sale: stream(seed, "sale"),
            arrivals: stream(seed, "arrivals"),
        }
    }
}

fn truncated_normal<R: Rng + ?Sized>(dist: &Normal<f64>, rng: &mut R) -> f64 {
    loop {
        let x = dist.sample(rng);
        if (0.0..=1.0).contains(&x) {
            return x;
        }
    }
}

fn trait_distribution(cfg: &SimConfig) -> Result<Normal<f64>, SimError> {
    Normal::new(cfg.population.trait_mean, cfg.population.trait_std)
        .map_err(|e| SimError::Config(format!("population.trait_std: {e}")))
}

fn draw_profiles<R: Rng + ?Sized>(
    dist: &Normal<f64>,
    ids: impl Iterator<Item = u32>,
    strategy: Strategy,
    rng: &mut R,
) -> Vec<ReviewerProfile> {
    ids.map(|i| {
        let qea = truncated_normal(dist, rng);
        let pdpa = truncated_normal(dist, rng);
        ReviewerProfile { id: ReviewerId(i), qea, pdpa, strategy }
    })
    .collect()
}

/// `n_reviewers` profiles with traits from a normal distribution truncated
/// to `[0, 1]` by redrawing. Strategies are all `non_expert_strategy` until
/// the initial experts are assigned theirs.
pub fn init_population<R: Rng + ?Sized>(
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<Vec<ReviewerProfile>, SimError> {
    let dist = trait_distribution(cfg)?;
    let n = u32::try_from(cfg.simulation.n_reviewers)
        .map_err(|_| SimError::Config("simulation.n_reviewers: too large".into()))?;
    Ok(draw_profiles(&dist, 0..n, cfg.population.non_expert_strategy, rng))
}

/// Uniform random `k`-subset of the reviewers with `qea >= min_initial_qea`,
/// ascending by id.
pub fn pick_initial_experts<R: Rng + ?Sized>(
    population: &[ReviewerProfile],
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<Vec<ReviewerId>, SimError> {
    let k = cfg.simulation.k_experts;
    let min = cfg.population.min_initial_qea;
    let eligible: Vec<ReviewerId> =
        population.iter().filter(|p| p.qea >= min).map(|p| p.id).collect();
    let mut chosen: Vec<ReviewerId> = if eligible.len() >= k {
        index::sample(rng, eligible.len(), k).into_iter().map(|i| eligible[i]).collect()
    } else {
        match cfg.population.initial_shortfall {
            Shortfall::Error => {
                return Err(SimError::Config(format!(
                    "population.min_initial_qea: only {} of {} reviewers have qea >= {min}, \
                     {k} initial experts needed",
                    eligible.len(),
                    population.len()
                )))
            }
            Shortfall::FillByQea => {
                let mut rest: Vec<&ReviewerProfile> =
                    population.iter().filter(|p| p.qea < min).collect();
                rest.sort_by(|a, b| b.qea.total_cmp(&a.qea).then(a.id.cmp(&b.id)));
                eligible.into_iter().chain(rest.iter().map(|p| p.id)).take(k).collect()
            }
        }
    };
    chosen.sort_unstable();
    Ok(chosen)
}

/// Per-strategy head counts for `k` initial experts by largest-remainder
/// apportionment: floors first, then one extra seat per strategy in order of
/// descending fractional part, ties going to the earlier strategy in
/// [`Strategy::ALL`]. Counts always sum to `k`.
pub fn strategy_counts(mix: &BTreeMap<Strategy, f64>, k: usize) -> Vec<(Strategy, usize)> {
    let quotas: Vec<(Strategy, f64)> =
        Strategy::ALL.iter().map(|s| (*s, mix.get(s).copied().unwrap_or(0.0) * k as f64)).collect();
    let mut counts: Vec<(Strategy, usize)> =
        quotas.iter().map(|&(s, q)| (s, q.floor() as usize)).collect();
    let assigned: usize = counts.iter().map(|c| c.1).sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a].1 - quotas[a].1.floor();
        let fb = quotas[b].1 - quotas[b].1.floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(k.saturating_sub(assigned)) {
        counts[i].1 += 1;
    }
    counts
}

/// Hidden properties of a simulated asset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimAsset {
    pub id: AssetId,
    pub quality: f64,
    pub demand: f64,
}

pub fn generate_asset<R: Rng + ?Sized>(id: AssetId, rng: &mut R) -> SimAsset {
    let quality = rng.random::<f64>();
    let demand = rng.random::<f64>();
    SimAsset { id, quality, demand }
}

/// Sale outcome: hidden demand plus Gaussian noise, clamped to `[0, 1]`.
pub fn observed_demand<R: Rng + ?Sized>(d: f64, sigma: f64, rng: &mut R) -> f64 {
    let noise = Normal::new(0.0, sigma).expect("sigma validated").sample(rng);
    (d + noise).clamp(0.0, 1.0)
}

/// One admitted round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub asset: u64,
    pub asset_q: f64,
    pub asset_d: f64,
    pub observed_demand: f64,
    pub rbar: f64,
    pub eps: Option<f64>,
    /// Prediction payouts.
    pub pool_paid: f64,
    pub endorsement_paid: f64,
    pub dividends_paid: f64,
    pub expert_turnover_count: usize,
    /// Assets rejected before this one was admitted.
    pub rejected_before: usize,
    pub population: usize,
    pub expert_mean_qea: f64,
    pub expert_mean_pdpa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub config: SimConfig,
    pub population: Vec<ReviewerProfile>,
    pub initial_experts: Vec<ReviewerId>,
    pub final_experts: Vec<ReviewerId>,
    pub ledger: ExpertiseLedger<f64>,
    pub series: Vec<RoundRecord>,
    pub log_head: [u8; 32],
    pub log_len: u64,
}

impl SimulationResult {
    pub fn profile(&self, id: ReviewerId) -> &ReviewerProfile {
        &self.population[id.0 as usize]
    }

    pub fn final_expertise(&self, id: ReviewerId) -> f64 {
        self.ledger.expertise(id, AREA)
    }

    pub fn is_initial_expert(&self, id: ReviewerId) -> bool {
        self.initial_experts.binary_search(&id).is_ok()
    }

    pub fn is_final_expert(&self, id: ReviewerId) -> bool {
        self.final_experts.contains(&id)
    }
}

/// A simulation in progress.
pub struct Simulation {
    cfg: SimConfig,
    noise: NoiseParams,
    engine: Engine<f64>,
    population: Vec<ReviewerProfile>,
    initial_experts: Vec<ReviewerId>,
    rng: Streams,
    next_asset: u64,
    series: Vec<RoundRecord>,
}

impl Simulation {
    pub fn new(cfg: SimConfig, sink: EventSink<f64>) -> Result<Self, SimError> {
        cfg.validate()?;
        let params: IncentiveParams<f64> = cfg.params()?;
        let mut rng = Streams::new(cfg.simulation.seed);
        let mut population = init_population(&cfg, &mut rng.population)?;
        let initial_experts = pick_initial_experts(&population, &cfg, &mut rng.experts)?;

        let mut order = initial_experts.clone();
        for i in (1..order.len()).rev() {
            let j = rng.experts.random_range(0..=i);
            order.swap(i, j);
        }
        let mut slots = order.into_iter();
        for (strategy, count) in strategy_counts(&cfg.strategy_mix, initial_experts.len()) {
            for id in slots.by_ref().take(count) {
                population[id.0 as usize].strategy = strategy;
            }
        }

        let mut engine = Engine::new(params, [AREA], sink)?;
        for p in &population {
            engine.register_reviewer(p.id)?;
        }
        let boot: Vec<(ReviewerId, f64)> =
            initial_experts.iter().map(|&id| (id, cfg.simulation.initial_expertise)).collect();
        engine.bootstrap_expertise(AREA, &boot)?;
        engine.rotate_experts();

        Ok(Self {
            noise: cfg.noise(),
            cfg,
            engine,
            population,
            initial_experts,
            rng,
            next_asset: 0,
            series: Vec::new(),
        })
    }

    pub fn engine(&self) -> &Engine<f64> {
        &self.engine
    }

    pub fn population(&self) -> &[ReviewerProfile] {
        &self.population
    }

    pub fn initial_experts(&self) -> &[ReviewerId] {
        &self.initial_experts
    }

    pub fn series(&self) -> &[RoundRecord] {
        &self.series
    }

    pub fn rounds_done(&self) -> usize {
        self.series.len()
    }

    fn inject_arrivals(&mut self, count: usize) -> Result<(), SimError> {
        let dist = trait_distribution(&self.cfg)?;
        let start = self.population.len() as u32;
        let fresh = draw_profiles(
            &dist,
            start..start + count as u32,
            self.cfg.population.non_expert_strategy,
            &mut self.rng.arrivals,
        );
        for p in &fresh {
            self.engine.register_reviewer(p.id)?;
        }
        self.population.extend(fresh);
        Ok(())
    }

    fn admit_next(&mut self) -> Result<(SimAsset, reviewnet_core::RoundId, f64, usize), SimError> {
        let attempts = self.cfg.simulation.max_admission_attempts;
        for rejected in 0..attempts {
            let asset = generate_asset(AssetId(self.next_asset), &mut self.rng.assets);
            self.next_asset += 1;
            let round = self.engine.submit_asset(AssetRecord::new(
                asset.id,
                [AREA],
                self.cfg.market.entry_fee,
            ))?;
            let experts = self.engine.round(round).expect("just opened").experts().to_vec();
            let ratings: Vec<(ReviewerId, f64)> = experts
                .iter()
                .map(|&id| {
                    let p = &self.population[id.0 as usize];
                    (id, honest_review(p, asset.quality, &self.noise, &mut self.rng.ratings))
                })
                .collect();
            self.engine.record_ratings(round, &ratings)?;
            let decision = self.engine.finalize_admission(round)?;
            if decision.admitted {
                return Ok((asset, round, decision.rbar, rejected));
            }
        }
        Err(SimError::Config(format!(
            "no asset admitted in {attempts} attempts; incentives.thresh is too high"
        )))
    }

    /// Runs one admitted round: admission (regenerating rejected assets),
    /// reviews, predictions, endorsements, sale and settlement.
    pub fn step(&mut self) -> Result<&RoundRecord, SimError> {
        let (asset, round, rbar, rejected_before) = self.admit_next()?;

        let reviews: Vec<(ReviewerId, f64)> = self
            .population
            .iter()
            .map(|p| (p.id, honest_review(p, asset.quality, &self.noise, &mut self.rng.reviews)))
            .collect();
        let predictions: Vec<(ReviewerId, f64)> = self
            .population
            .iter()
            .map(|p| (p.id, honest_prediction(p, asset.demand, &self.noise, &mut self.rng.predictions)))
            .collect();
        self.engine.record_reviews(round, &reviews)?;
        self.engine.record_predictions(round, &predictions)?;

        let index = ReviewIndex::new(&reviews, self.engine.current_experts(AREA));
        let endorsements: Vec<(ReviewerId, ReviewerId)> = self
            .population
            .iter()
            .zip(&reviews)
            .filter_map(|(p, &(_, own))| {
                index
                    .choose(p.strategy, p.id, own, &mut self.rng.endorsements)
                    .map(|to| (p.id, to))
            })
            .collect();
        self.engine.record_endorsements(round, &endorsements)?;

        let demand =
            observed_demand(asset.demand, self.cfg.market.sale_noise_sigma, &mut self.rng.sale);
        let outcome = self.engine.settle_round(round, demand)?;
        let area = &outcome.areas[0];

        let k = area.experts.len().max(1) as f64;
        let (sq, sp) = area.experts.iter().fold((0.0, 0.0), |(q, d), id| {
            let p = &self.population[id.0 as usize];
            (q + p.qea, d + p.pdpa)
        });
        let record = RoundRecord {
            round: self.series.len(),
            asset: asset.id.0,
            asset_q: asset.quality,
            asset_d: asset.demand,
            observed_demand: demand,
            rbar,
            eps: area.eps,
            pool_paid: area.prediction,
            endorsement_paid: area.endorsement,
            dividends_paid: area.dividends + area.prediction_dividends,
            expert_turnover_count: area.turnover,
            rejected_before,
            population: self.population.len(),
            expert_mean_qea: sq / k,
            expert_mean_pdpa: sp / k,
        };
        self.series.push(record);

        let done = self.series.len();
        if let Some((count, every)) = self.cfg.arrivals() {
            if done % every == 0 && done < self.cfg.simulation.n_rounds {
                self.inject_arrivals(count)?;
            }
        }
        Ok(self.series.last().expect("just pushed"))
    }

    pub fn run(mut self) -> Result<SimulationResult, SimError> {
        while self.series.len() < self.cfg.simulation.n_rounds {
            self.step()?;
        }
        self.finish()
    }

    /// Flushes the event log and packages the outcome.
    pub fn finish(mut self) -> Result<SimulationResult, SimError> {
        self.engine.log_mut().finish()?;
        Ok(SimulationResult {
            final_experts: self.engine.current_experts(AREA).to_vec(),
            ledger: self.engine.ledger().clone(),
            log_head: self.engine.log().head(),
            log_len: self.engine.log().len(),
            config: self.cfg,
            population: self.population,
            initial_experts: self.initial_experts,
            series: self.series,
        })
    }
}

/// Runs a full simulation with the event log reduced to its hash chain.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimulationResult, SimError> {
    Simulation::new(cfg.clone(), EventSink::Null)?.run()
}

/// Runs a full simulation writing the event log to `sink`.
pub fn run_simulation_logged(
    cfg: &SimConfig,
    sink: EventSink<f64>,
) -> Result<SimulationResult, SimError> {
    Simulation::new(cfg.clone(), sink)?.run()
}
