//! Reviewer behaviour: noisy estimates from hidden traits and endorsement
//! strategies.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use reviewnet_core::ReviewerId;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Honest,
    Lazy,
    EndorseExpert,
    EndorsePoor,
    NoEndorsement,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Honest,
        Strategy::Lazy,
        Strategy::EndorseExpert,
        Strategy::EndorsePoor,
        Strategy::NoEndorsement,
    ];

    pub const SELFISH: [Strategy; 4] =
        [Strategy::Lazy, Strategy::EndorseExpert, Strategy::EndorsePoor, Strategy::NoEndorsement];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Honest => "honest",
            Strategy::Lazy => "lazy",
            Strategy::EndorseExpert => "endorse-expert",
            Strategy::EndorsePoor => "endorse-poor",
            Strategy::NoEndorsement => "no-endorsement",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown strategy {s:?}"))
    }
}

/// Hidden traits; constant for a reviewer's lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReviewerProfile {
    pub id: ReviewerId,
    /// Quality estimation ability.
    pub qea: f64,
    /// Popular demand prediction ability.
    pub pdpa: f64,
    pub strategy: Strategy,
}

impl ReviewerProfile {
    pub fn combined(&self) -> f64 {
        (self.qea + self.pdpa) / 2.0
    }
}

/// Maps a trait to a noise half-width: linear from `w_max` at 0 to `w_min` at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub w_max: f64,
    pub w_min: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self { w_max: 0.5, w_min: 0.001 }
    }
}

pub fn trait_width(t: f64, noise: &NoiseParams) -> f64 {
    noise.w_max * (1.0 - t) + noise.w_min * t
}

/// Symmetric triangular distribution on `[peak - w, peak + w]`, restricted
/// to `[0, 1]` and renormalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangularNoise {
    pub peak: f64,
    pub half_width: f64,
}

impl TriangularNoise {
    pub fn new(peak: f64, half_width: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&peak) && half_width > 0.0);
        Self { peak, half_width }
    }

    fn raw_cdf(&self, x: f64) -> f64 {
        let w = self.half_width;
        let lo = self.peak - w;
        let hi = self.peak + w;
        if x <= lo {
            0.0
        } else if x <= self.peak {
            let d = x - lo;
            d * d / (2.0 * w * w)
        } else if x < hi {
            let d = hi - x;
            1.0 - d * d / (2.0 * w * w)
        } else {
            1.0
        }
    }

    fn raw_quantile(&self, y: f64) -> f64 {
        let w = self.half_width;
        if y <= 0.5 {
            self.peak - w + w * (2.0 * y).sqrt()
        } else {
            self.peak + w - w * (2.0 * (1.0 - y)).sqrt()
        }
    }

    /// CDF of the truncated distribution.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let lo = self.raw_cdf(0.0);
        let hi = self.raw_cdf(1.0);
        (self.raw_cdf(x) - lo) / (hi - lo)
    }

    /// Inverse-CDF sample for `u` in `[0, 1)`.
    pub fn sample_at(&self, u: f64) -> f64 {
        let lo = self.raw_cdf(0.0);
        let hi = self.raw_cdf(1.0);
        self.raw_quantile(lo + u * (hi - lo)).clamp(0.0, 1.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_at(rng.random::<f64>())
    }
}

pub fn sample_truncated_triangular(peak: f64, half_width: f64, u: f64) -> f64 {
    TriangularNoise::new(peak, half_width).sample_at(u)
}

/// Review of an asset with hidden quality `q`.
pub fn honest_review<R: Rng + ?Sized>(
    profile: &ReviewerProfile,
    q: f64,
    noise: &NoiseParams,
    rng: &mut R,
) -> f64 {
    TriangularNoise::new(q, trait_width(profile.qea, noise)).sample(rng)
}

/// Prediction of an asset's hidden demand `d`.
pub fn honest_prediction<R: Rng + ?Sized>(
    profile: &ReviewerProfile,
    d: f64,
    noise: &NoiseParams,
    rng: &mut R,
) -> f64 {
    TriangularNoise::new(d, trait_width(profile.pdpa, noise)).sample(rng)
}

/// What an endorser can observe about another reviewer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visible {
    pub id: ReviewerId,
    pub review: f64,
    pub is_expert: bool,
    pub expertise: f64,
}

/// Endorsement choice over an explicit visible set (which excludes the
/// endorser). Lazy and EndorseExpert draw one uniform index over the
/// visible reviewers, resp. visible experts, in the given order.
pub fn choose_endorsement<R: Rng + ?Sized>(
    strategy: Strategy,
    own_review: f64,
    visible: &[Visible],
    rng: &mut R,
) -> Option<ReviewerId> {
    let by_distance = |far: bool| {
        visible
            .iter()
            .map(|v| ((own_review - v.review).abs(), v.id))
            .min_by(|a, b| {
                let ord = a.0.partial_cmp(&b.0).expect("reviews are finite");
                if far { ord.reverse() } else { ord }.then(a.1.cmp(&b.1))
            })
            .map(|(_, id)| id)
    };
    match strategy {
        Strategy::Honest => by_distance(false),
        Strategy::EndorsePoor => by_distance(true),
        Strategy::Lazy if visible.is_empty() => None,
        Strategy::Lazy => Some(visible[rng.random_range(0..visible.len())].id),
        Strategy::EndorseExpert => {
            let experts: Vec<ReviewerId> =
                visible.iter().filter(|v| v.is_expert).map(|v| v.id).collect();
            if experts.is_empty() {
                None
            } else {
                Some(experts[rng.random_range(0..experts.len())])
            }
        }
        Strategy::NoEndorsement => None,
    }
}

/// All reviews of a round sorted by value, for logarithmic nearest and
/// farthest queries. Produces the same choices as [`choose_endorsement`]
/// with a visible set ordered by id.
#[derive(Debug, Clone)]
pub struct ReviewIndex {
    /// `(review, id)` ascending.
    sorted: Vec<(f64, ReviewerId)>,
    /// Ids ascending, as the visible order.
    ids: Vec<ReviewerId>,
    /// Current experts, ascending.
    experts: Vec<ReviewerId>,
}

impl ReviewIndex {
    pub fn new(reviews: &[(ReviewerId, f64)], experts: &[ReviewerId]) -> Self {
        let mut sorted: Vec<(f64, ReviewerId)> = reviews.iter().map(|&(id, r)| (r, id)).collect();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("reviews are finite").then(a.1.cmp(&b.1)));
        let mut ids: Vec<ReviewerId> = reviews.iter().map(|&(id, _)| id).collect();
        ids.sort_unstable();
        let mut experts: Vec<ReviewerId> =
            experts.iter().copied().filter(|e| ids.binary_search(e).is_ok()).collect();
        experts.sort_unstable();
        experts.dedup();
        Self { sorted, ids, experts }
    }

    fn best_in(
        &self,
        me: ReviewerId,
        own: f64,
        range: impl Iterator<Item = usize>,
        target: f64,
        best: &mut Option<ReviewerId>,
    ) {
        for i in range {
            let (r, id) = self.sorted[i];
            if id == me {
                continue;
            }
            if (own - r).abs() != target {
                break;
            }
            if best.is_none_or(|b| id < b) {
                *best = Some(id);
            }
        }
    }

    fn first_other(&self, me: ReviewerId, mut range: impl Iterator<Item = usize>) -> Option<f64> {
        range.find(|&i| self.sorted[i].1 != me).map(|i| self.sorted[i].0)
    }

    /// Nearest review to `own` other than `me`'s, ties by ascending id.
    pub fn nearest(&self, me: ReviewerId, own: f64) -> Option<ReviewerId> {
        let n = self.sorted.len();
        let pos = self.sorted.partition_point(|&(r, _)| r < own);
        let left = self.first_other(me, (0..pos).rev()).map(|r| (own - r).abs());
        let right = self.first_other(me, pos..n).map(|r| (own - r).abs());
        let target = match (left, right) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => return None,
        };
        let mut best = None;
        self.best_in(me, own, (0..pos).rev(), target, &mut best);
        self.best_in(me, own, pos..n, target, &mut best);
        best
    }

    /// Farthest review from `own` other than `me`'s, ties by ascending id.
    pub fn farthest(&self, me: ReviewerId, own: f64) -> Option<ReviewerId> {
        let n = self.sorted.len();
        let low = self.first_other(me, 0..n).map(|r| (own - r).abs());
        let high = self.first_other(me, (0..n).rev()).map(|r| (own - r).abs());
        let target = match (low, high) {
            (Some(a), Some(b)) => a.max(b),
            _ => return None,
        };
        let mut best = None;
        self.best_in(me, own, 0..n, target, &mut best);
        self.best_in(me, own, (0..n).rev(), target, &mut best);
        best
    }

    /// Same draws and result as [`choose_endorsement`] over every other
    /// indexed reviewer in id order.
    pub fn choose<R: Rng + ?Sized>(
        &self,
        strategy: Strategy,
        me: ReviewerId,
        own: f64,
        rng: &mut R,
    ) -> Option<ReviewerId> {
        let pick = |pool: &[ReviewerId], rng: &mut R| {
            let mine = pool.binary_search(&me).ok();
            let n = pool.len() - mine.is_some() as usize;
            if n == 0 {
                return None;
            }
            let j = rng.random_range(0..n);
            Some(match mine {
                Some(m) if j >= m => pool[j + 1],
                _ => pool[j],
            })
        };
        match strategy {
            Strategy::Honest => self.nearest(me, own),
            Strategy::EndorsePoor => self.farthest(me, own),
            Strategy::Lazy => pick(&self.ids, rng),
            Strategy::EndorseExpert => pick(&self.experts, rng),
            Strategy::NoEndorsement => None,
        }
    }
}
