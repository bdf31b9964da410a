//! Simulation configuration and its TOML form.
//!
//! ```toml
//! [simulation]
//! seed = 42
//! n_reviewers = 500
//! n_rounds = 3000
//! k_experts = 50
//! initial_expertise = 100000.0
//!
//! [population]
//! trait_mean = 0.5
//! trait_std = 0.15
//! min_initial_qea = 0.0
//! initial_shortfall = "error"   # or "fill-by-qea"
//!
//! [market]
//! sale_noise_sigma = 0.05
//! arrivals = false
//!
//! [incentives]
//! slope = -1.0                  # or "neg-inf"
//!
//! [strategy_mix]
//! honest = 1.0
//! ```
//!
//! Every key is optional; omitted keys take the defaults below.

use std::collections::BTreeMap;
use std::path::Path;

use reviewnet_core::{IncentiveParams, Slope};
use serde::{Deserialize, Serialize};

use crate::agents::{NoiseParams, Strategy};
use crate::error::SimError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub simulation: RunSettings,
    pub population: PopulationSettings,
    pub market: MarketSettings,
    pub incentives: IncentiveSettings,
    /// Fractions of the initial expert set per strategy.
    pub strategy_mix: BTreeMap<Strategy, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    #[serde(with = "seed_format")]
    pub seed: u64,
    pub n_reviewers: usize,
    /// Admitted rounds to run.
    pub n_rounds: usize,
    pub k_experts: usize,
    pub initial_expertise: f64,
    /// Rejected assets regenerated per round before giving up.
    pub max_admission_attempts: usize,
}

/// What to do when fewer than `k_experts` reviewers meet `min_initial_qea`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shortfall {
    Error,
    /// Take every eligible reviewer and complete the set with the highest
    /// QEA among the rest.
    FillByQea,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationSettings {
    pub trait_mean: f64,
    pub trait_std: f64,
    pub min_initial_qea: f64,
    pub initial_shortfall: Shortfall,
    pub noise_w_max: f64,
    pub noise_w_min: f64,
    /// Strategy of reviewers outside the initial expert set, arrivals included.
    pub non_expert_strategy: Strategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketSettings {
    pub sale_noise_sigma: f64,
    pub entry_fee: f64,
    pub arrivals: bool,
    pub arrival_count: usize,
    pub arrival_every: usize,
}

/// Incentive constants; the channel weights come from `slope`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IncentiveSettings {
    pub alpha: f64,
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    pub pool_scale: f64,
    pub thresh: f64,
    pub burn_fraction: f64,
    pub slope: Slope<f64>,
    pub broad_dividends: bool,
    pub token_payout_fraction: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            seed: 1,
            n_reviewers: 500,
            n_rounds: 3000,
            k_experts: 50,
            initial_expertise: 100_000.0,
            max_admission_attempts: 1000,
        }
    }
}

impl Default for PopulationSettings {
    fn default() -> Self {
        let noise = NoiseParams::default();
        Self {
            trait_mean: 0.5,
            trait_std: 0.15,
            min_initial_qea: 0.0,
            initial_shortfall: Shortfall::Error,
            noise_w_max: noise.w_max,
            noise_w_min: noise.w_min,
            non_expert_strategy: Strategy::Honest,
        }
    }
}

impl Default for MarketSettings {
    fn default() -> Self {
        Self {
            sale_noise_sigma: 0.05,
            entry_fee: 1.0,
            arrivals: false,
            arrival_count: 10,
            arrival_every: 100,
        }
    }
}

impl Default for IncentiveSettings {
    fn default() -> Self {
        let p = IncentiveParams::<f64>::default();
        Self {
            alpha: DEFAULT_GAIN_COEFFICIENT,
            beta: DEFAULT_GAIN_COEFFICIENT,
            c1: p.c1,
            c2: p.c2,
            pool_scale: DEFAULT_POOL_SCALE,
            thresh: p.thresh,
            burn_fraction: p.burn_fraction,
            slope: Slope::Finite(-1.0),
            broad_dividends: p.broad_dividends,
            token_payout_fraction: p.token_payout_fraction,
        }
    }
}

/// Endorsement gain coefficient (both `alpha` and `beta`) used by the
/// simulator. At the engine default of 0.001 a 3000-round run moves too
/// little expertise to ever displace a bootstrapped expert.
pub const DEFAULT_GAIN_COEFFICIENT: f64 = 0.0075;

/// Prediction pool per unit of system error used by the simulator, sized so
/// that prediction payouts are of the same order as endorsement payouts at
/// slope -1 (see the calibration notes in the README).
pub const DEFAULT_POOL_SCALE: f64 = 20_000_000.0;

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            simulation: RunSettings::default(),
            population: PopulationSettings::default(),
            market: MarketSettings::default(),
            incentives: IncentiveSettings::default(),
            strategy_mix: BTreeMap::from([(Strategy::Honest, 1.0)]),
        }
    }
}

fn bad(key: &str, reason: impl std::fmt::Display) -> SimError {
    SimError::Config(format!("{key}: {reason}"))
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            SimError::Config(m) => SimError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    pub fn noise(&self) -> NoiseParams {
        NoiseParams { w_max: self.population.noise_w_max, w_min: self.population.noise_w_min }
    }

    pub fn arrivals(&self) -> Option<(usize, usize)> {
        let m = &self.market;
        (m.arrivals && m.arrival_count > 0).then_some((m.arrival_count, m.arrival_every))
    }

    pub fn params(&self) -> Result<IncentiveParams<f64>, SimError> {
        let i = &self.incentives;
        let base = IncentiveParams {
            alpha: i.alpha,
            beta: i.beta,
            c1: i.c1,
            c2: i.c2,
            pool_scale: i.pool_scale,
            k: self.simulation.k_experts,
            thresh: i.thresh,
            burn_fraction: i.burn_fraction,
            broad_dividends: i.broad_dividends,
            token_payout_fraction: i.token_payout_fraction,
            ..IncentiveParams::default()
        };
        let p = base.with_slope(i.slope).map_err(|e| bad("incentives.slope", e))?;
        p.validate().map_err(|e| bad("incentives", e))?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let s = &self.simulation;
        if s.n_reviewers == 0 {
            return Err(bad("simulation.n_reviewers", "must be positive"));
        }
        if s.k_experts == 0 || s.k_experts > s.n_reviewers {
            return Err(bad("simulation.k_experts", "must be in 1..=n_reviewers"));
        }
        if !(s.initial_expertise.is_finite() && s.initial_expertise > 0.0) {
            return Err(bad("simulation.initial_expertise", "must be positive"));
        }
        if s.max_admission_attempts == 0 {
            return Err(bad("simulation.max_admission_attempts", "must be positive"));
        }
        let p = &self.population;
        if !(0.0..=1.0).contains(&p.trait_mean) {
            return Err(bad("population.trait_mean", "must lie in [0, 1]"));
        }
        if !(p.trait_std.is_finite() && p.trait_std >= 0.0) {
            return Err(bad("population.trait_std", "must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&p.min_initial_qea) {
            return Err(bad("population.min_initial_qea", "must lie in [0, 1]"));
        }
        if !(p.noise_w_min > 0.0 && p.noise_w_max >= p.noise_w_min && p.noise_w_max.is_finite()) {
            return Err(bad("population.noise_w_min", "need 0 < noise_w_min <= noise_w_max"));
        }
        let m = &self.market;
        if !(m.sale_noise_sigma.is_finite() && m.sale_noise_sigma >= 0.0) {
            return Err(bad("market.sale_noise_sigma", "must be nonnegative"));
        }
        if !(m.entry_fee.is_finite() && m.entry_fee >= 0.0) {
            return Err(bad("market.entry_fee", "must be nonnegative"));
        }
        if m.arrivals && m.arrival_every == 0 {
            return Err(bad("market.arrival_every", "must be positive"));
        }
        if self.strategy_mix.values().any(|&f| !(0.0..=1.0).contains(&f)) {
            return Err(bad("strategy_mix", "fractions must lie in [0, 1]"));
        }
        let total: f64 = self.strategy_mix.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(bad("strategy_mix", format!("fractions sum to {total}, expected 1")));
        }
        self.params()?;
        Ok(())
    }
}

/// Seeds are written as TOML integers when they fit, as decimal strings
/// otherwise (TOML integers are signed 64-bit).
mod seed_format {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        if *v <= i64::MAX as u64 {
            s.serialize_i64(*v as i64)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => u64::try_from(v).map_err(serde::de::Error::custom),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}
