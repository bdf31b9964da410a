use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::scalar::{hexbits, Scalar};

/// Authority-chosen constants of the incentive scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"), deny_unknown_fields)]
pub struct IncentiveParams<T> {
    /// Coefficient of the minimum endorsement gain, per expertise point of the endorser.
    #[serde(with = "hexbits")]
    pub alpha: T,
    /// Coefficient of the additional gain, per point of expertise gap.
    #[serde(with = "hexbits")]
    pub beta: T,
    /// Dividend scale.
    #[serde(with = "hexbits")]
    pub c1: T,
    /// Floor on the prediction error used when converting errors to shares.
    #[serde(with = "hexbits")]
    pub c2: T,
    /// Prediction reward pool per unit of system-wide error.
    #[serde(with = "hexbits")]
    pub pool_scale: T,
    /// Expert pool size per area.
    pub k: usize,
    /// Admission threshold on the weighted mean rating.
    #[serde(with = "hexbits")]
    pub thresh: T,
    #[serde(with = "hexbits")]
    pub burn_fraction: T,
    #[serde(with = "hexbits")]
    pub w_endorse: T,
    #[serde(with = "hexbits")]
    pub w_predict: T,
    /// Also pay investors dividends on the prediction rewards of their endorsees.
    pub broad_dividends: bool,
    /// Fraction of the token incentive pool paid to admission raters per settled round.
    #[serde(with = "hexbits")]
    pub token_payout_fraction: T,
}

impl<T: Scalar> Default for IncentiveParams<T> {
    fn default() -> Self {
        let (w_endorse, w_predict) = Slope::Finite(-T::one()).weights().expect("valid slope");
        Self {
            alpha: T::lit(0.001),
            beta: T::lit(0.001),
            c1: T::lit(0.5),
            c2: T::lit(1e-3),
            pool_scale: T::lit(10_000.0),
            k: 50,
            thresh: T::lit(0.3),
            burn_fraction: T::one(),
            w_endorse,
            w_predict,
            broad_dividends: false,
            token_payout_fraction: T::lit(0.1),
        }
    }
}

impl<T: Scalar> IncentiveParams<T> {
    pub fn with_slope(mut self, slope: Slope<T>) -> Result<Self, CoreError> {
        let (e, p) = slope.weights()?;
        self.w_endorse = e;
        self.w_predict = p;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let nonneg = |name: &'static str, v: T| {
            if v.is_finite() && v >= T::zero() {
                Ok(())
            } else {
                Err(CoreError::Negative { name, value: v.to_f64().unwrap_or(f64::NAN) })
            }
        };
        let positive = |name: &'static str, v: T| {
            if v.is_finite() && v > T::zero() {
                Ok(())
            } else {
                Err(CoreError::InvalidParam { name, reason: format!("must be positive, got {v}") })
            }
        };
        let unit = |name: &'static str, v: T| {
            if v >= T::zero() && v <= T::one() {
                Ok(())
            } else {
                Err(CoreError::OutOfUnitRange { name, value: v.to_f64().unwrap_or(f64::NAN) })
            }
        };
        nonneg("alpha", self.alpha)?;
        nonneg("beta", self.beta)?;
        positive("c1", self.c1)?;
        positive("c2", self.c2)?;
        positive("pool_scale", self.pool_scale)?;
        if self.k == 0 {
            return Err(CoreError::InvalidParam { name: "k", reason: "must be at least 1".into() });
        }
        unit("thresh", self.thresh)?;
        positive("burn_fraction", self.burn_fraction)?;
        unit("burn_fraction", self.burn_fraction)?;
        unit("w_endorse", self.w_endorse)?;
        unit("w_predict", self.w_predict)?;
        let sum = (self.w_endorse + self.w_predict).to_f64().unwrap_or(f64::NAN);
        let tol = (8.0 * T::epsilon().to_f64().unwrap_or(0.0)).max(1e-12);
        if (sum - 1.0).abs() > tol {
            return Err(CoreError::InvalidParam {
                name: "w_endorse + w_predict",
                reason: format!("must equal 1, got {sum}"),
            });
        }
        unit("token_payout_fraction", self.token_payout_fraction)?;
        Ok(())
    }
}

/// Trade-off between quality estimation and demand prediction when selecting
/// experts, realized as weights on the two expertise channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope<T> {
    Finite(T),
    NegInfinity,
}

impl<T: Scalar> Slope<T> {
    /// `(w_endorse, w_predict) = (1/(1+|s|), |s|/(1+|s|))`, `(0, 1)` at negative infinity.
    pub fn weights(&self) -> Result<(T, T), CoreError> {
        match *self {
            Slope::NegInfinity => Ok((T::zero(), T::one())),
            Slope::Finite(s) if s.is_nan() || s > T::zero() => Err(CoreError::InvalidParam {
                name: "slope",
                reason: format!("must be <= 0, got {s}"),
            }),
            Slope::Finite(s) if s.is_infinite() => Ok((T::zero(), T::one())),
            Slope::Finite(s) => {
                let m = s.abs();
                let denom = T::one() + m;
                Ok((T::one() / denom, m / denom))
            }
        }
    }
}

impl<T: Scalar> std::fmt::Display for Slope<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Slope::Finite(s) => write!(f, "{s}"),
            Slope::NegInfinity => f.write_str("neg-inf"),
        }
    }
}

impl<T: Scalar> std::str::FromStr for Slope<T> {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if matches!(t, "neg-inf" | "-inf" | "-infinity") {
            return Ok(Slope::NegInfinity);
        }
        let v: f64 = t.parse().map_err(|_| CoreError::InvalidParam {
            name: "slope",
            reason: format!("expected a real <= 0 or 'neg-inf', got {t:?}"),
        })?;
        let slope = Slope::Finite(T::lit(v));
        slope.weights()?;
        Ok(slope)
    }
}

impl<T: Scalar> Serialize for Slope<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Slope::Finite(v) => s.serialize_f64(v.to_f64().unwrap_or(f64::NAN)),
            Slope::NegInfinity => s.serialize_str("neg-inf"),
        }
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Slope<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let slope = match Raw::deserialize(d)? {
            Raw::Num(v) => Slope::Finite(T::lit(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom)?,
        };
        slope.weights().map_err(serde::de::Error::custom)?;
        Ok(slope)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_weights_cover_the_three_modes() {
        assert_eq!(Slope::Finite(0.0f64).weights().unwrap(), (1.0, 0.0));
        assert_eq!(Slope::Finite(-1.0f64).weights().unwrap(), (0.5, 0.5));
        assert_eq!(Slope::<f64>::NegInfinity.weights().unwrap(), (0.0, 1.0));
        assert!(Slope::Finite(0.5f64).weights().is_err());
    }

    #[test]
    fn slope_parses_text_forms() {
        assert_eq!("neg-inf".parse::<Slope<f64>>().unwrap(), Slope::NegInfinity);
        assert_eq!("-2".parse::<Slope<f64>>().unwrap(), Slope::Finite(-2.0));
        assert!("1".parse::<Slope<f64>>().is_err());
        assert!("steep".parse::<Slope<f64>>().is_err());
    }

    #[test]
    fn default_params_validate() {
        IncentiveParams::<f64>::default().validate().unwrap();
        IncentiveParams::<f32>::default().validate().unwrap();
        let mut p = IncentiveParams::<f64>::default();
        p.w_predict = 0.7;
        assert!(p.validate().is_err());
        p = IncentiveParams::default();
        p.burn_fraction = 0.0;
        assert!(p.validate().is_err());
    }
}
