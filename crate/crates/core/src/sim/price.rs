//! Seeded synthetic real-time price process: a mean-reverting multiplier on
//! a diurnal shape, with multiplicative lognormal spikes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimError;
use crate::data::PERIODS_PER_DAY;
use crate::numeric::{cos, exp, standard_normal};

/// Within-day profile, resolved to one multiplier (or level) per period.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "shape", rename_all = "snake_case"))]
pub enum DayShape {
    Flat { level: f64 },
    /// `level + amplitude * cos(2 pi (q - peak_period) / 96)`
    Sine {
        level: f64,
        amplitude: f64,
        peak_period: u32,
    },
    Profile { values: Vec<f64> },
}

impl DayShape {
    pub fn resolve(&self) -> Result<Vec<f64>, SimError> {
        let values = match self {
            DayShape::Flat { level } => vec![*level; PERIODS_PER_DAY],
            DayShape::Sine {
                level,
                amplitude,
                peak_period,
            } => (0..PERIODS_PER_DAY)
                .map(|q| {
                    let phase = core::f64::consts::TAU
                        * (q as f64 - (*peak_period as f64 - 1.0))
                        / PERIODS_PER_DAY as f64;
                    level + amplitude * cos(phase)
                })
                .collect(),
            DayShape::Profile { values } => {
                if values.len() != PERIODS_PER_DAY {
                    return Err(SimError::InvalidSpec(format!(
                        "profile must have {PERIODS_PER_DAY} entries, found {}",
                        values.len()
                    )));
                }
                values.clone()
            }
        };
        Ok(values)
    }

    fn resolve_positive(&self, what: &str) -> Result<Vec<f64>, SimError> {
        let values = self.resolve()?;
        if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(SimError::InvalidSpec(format!(
                "{what}: entries must be positive and finite"
            )));
        }
        Ok(values)
    }
}

/// Price process parameters.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PriceProcessSpec {
    /// Mean level in USD/MWh.
    pub mean_level: f64,
    /// Per-period pull of the multiplier back to 1, in [0, 1].
    pub reversion: f64,
    /// Per-period standard deviation of the multiplier noise.
    pub volatility: f64,
    /// Probability of a spike in any period.
    pub spike_intensity: f64,
    /// Lognormal parameters of the spike multiplier.
    pub spike_ln_mean: f64,
    pub spike_ln_sd: f64,
    /// Diurnal multiplier shape (dimensionless, positive).
    pub diurnal: DayShape,
    pub seed: u64,
}

impl PriceProcessSpec {
    fn validate(&self) -> Result<Vec<f64>, SimError> {
        if !(self.mean_level > 0.0) {
            return Err(SimError::InvalidSpec("mean_level must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.spike_intensity) {
            return Err(SimError::InvalidSpec(
                "spike_intensity must lie in [0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.reversion) {
            return Err(SimError::InvalidSpec("reversion must lie in [0, 1]".into()));
        }
        if self.volatility < 0.0 || !self.volatility.is_finite() {
            return Err(SimError::InvalidSpec(
                "volatility must be non-negative".into(),
            ));
        }
        if !self.spike_ln_sd.is_finite() || self.spike_ln_sd < 0.0 {
            return Err(SimError::InvalidSpec(
                "spike_ln_sd must be non-negative".into(),
            ));
        }
        self.diurnal.resolve_positive("diurnal")
    }
}

/// Generates `days * 96` prices, reproducible per seed.
///
/// The multiplier follows `x' = x + reversion * (1 - x) + volatility * z`;
/// a spike multiplies the period's price by `exp(N(spike_ln_mean,
/// spike_ln_sd))`. Draw order is fixed: one normal for the noise, one
/// uniform for the spike test, one normal when a spike fires.
pub fn synth_prices(spec: &PriceProcessSpec, days: usize) -> Result<Vec<f64>, SimError> {
    if days == 0 {
        return Err(SimError::InvalidSpec("days must be at least 1".into()));
    }
    let diurnal = spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = days * PERIODS_PER_DAY;
    let mut prices = Vec::with_capacity(n);
    let mut x = 1.0f64;
    for t in 0..n {
        let z = standard_normal(&mut rng);
        x += spec.reversion * (1.0 - x) + spec.volatility * z;
        let mut price = spec.mean_level * diurnal[t % PERIODS_PER_DAY] * x;
        let u: f64 = rng.random();
        if u < spec.spike_intensity {
            let mag = exp(spec.spike_ln_mean + spec.spike_ln_sd * standard_normal(&mut rng));
            price *= 1.0 + mag;
        }
        prices.push(price);
    }
    Ok(prices)
}
