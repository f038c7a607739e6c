//! Kalman-filter estimator with a random-walk state of nine sensitivity
//! coefficients.
//!
//! The observation couples the demeaned tail load to the demeaned anchor
//! price: `load[t+tau] - mean_load = beta_tau * (price[t] - mean_price) +
//! noise`, with clock-time means taken from the training split. Each
//! coefficient runs its own scalar predict/update recursion; elasticities
//! are the filtered coefficients rescaled by `lambda / load`.

use alloc::format;
use alloc::vec::Vec;

use super::BaselineError;
use crate::data::{SeriesDataset, PERIODS_PER_DAY};
use crate::estimator::ELASTICITY_DIM;
use crate::metrics::ElasticityVector;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KfaConfig {
    /// Random-walk state-noise variance per period.
    pub q: f64,
    /// Observation-noise variance.
    pub r: f64,
    /// Initial state covariance.
    pub p0: f64,
}

impl Default for KfaConfig {
    fn default() -> Self {
        Self {
            q: 1e-4,
            r: 1e-2,
            p0: 1.0,
        }
    }
}

/// Per-clock-period mean price and load, fit on the training split.
#[derive(Clone, Debug, PartialEq)]
pub struct ClockMeans {
    pub price: Vec<f64>,
    pub load: Vec<f64>,
}

pub fn clock_means(train: &SeriesDataset) -> ClockMeans {
    let mut price = alloc::vec![0.0; PERIODS_PER_DAY];
    let mut load = alloc::vec![0.0; PERIODS_PER_DAY];
    let mut count = alloc::vec![0.0; PERIODS_PER_DAY];
    for (k, rec) in train.records().iter().enumerate() {
        let q = k % PERIODS_PER_DAY;
        price[q] += rec.price;
        load[q] += rec.load;
        count[q] += 1.0;
    }
    for q in 0..PERIODS_PER_DAY {
        if count[q] > 0.0 {
            price[q] /= count[q];
            load[q] /= count[q];
        }
    }
    ClockMeans { price, load }
}

/// Runs the filter chronologically over the whole series and reads the
/// state off at each requested anchor (before that anchor's own update).
/// Anchors must be sorted ascending.
pub fn kfa_estimate(
    ds: &SeriesDataset,
    anchors: &[usize],
    means: &ClockMeans,
    cfg: &KfaConfig,
) -> Result<Vec<ElasticityVector>, BaselineError> {
    if !(cfg.q > 0.0 && cfg.r > 0.0 && cfg.p0 > 0.0) {
        return Err(BaselineError::Config(format!(
            "q, r, and p0 must be positive (q = {}, r = {})",
            cfg.q, cfg.r
        )));
    }
    if anchors.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BaselineError::Config(
            "anchors must be sorted strictly ascending".into(),
        ));
    }
    let records = ds.records();
    if let Some(&last) = anchors.last() {
        if last + ELASTICITY_DIM > records.len() {
            return Err(BaselineError::Config(format!(
                "anchor {last} has no full elasticity tail"
            )));
        }
    }
    let mut beta = [0.0f64; ELASTICITY_DIM];
    let mut cov = [cfg.p0; ELASTICITY_DIM];
    let mut out = Vec::with_capacity(anchors.len());
    let mut next_anchor = 0usize;
    for t in 0..records.len().saturating_sub(ELASTICITY_DIM - 1) {
        if next_anchor < anchors.len() && anchors[next_anchor] == t {
            let lambda = records[t].price;
            let mut values = [0.0; ELASTICITY_DIM];
            for tau in 0..ELASTICITY_DIM {
                values[tau] = beta[tau] * lambda / records[t + tau].load;
            }
            out.push(ElasticityVector {
                anchor_timestamp: records[t].timestamp,
                values,
            });
            next_anchor += 1;
        }
        let x = records[t].price - means.price[t % PERIODS_PER_DAY];
        for tau in 0..ELASTICITY_DIM {
            let y = records[t + tau].load - means.load[(t + tau) % PERIODS_PER_DAY];
            // predict
            let p_pred = cov[tau] + cfg.q;
            // update
            let gain = p_pred * x / (x * x * p_pred + cfg.r);
            beta[tau] += gain * (y - beta[tau] * x);
            cov[tau] = p_pred * (1.0 - gain * x);
            if !(cov[tau] > 0.0) || !beta[tau].is_finite() {
                return Err(BaselineError::Numeric(format!(
                    "covariance collapsed at period {t} (q = {}, r = {})",
                    cfg.q, cfg.r
                )));
            }
        }
    }
    if next_anchor != anchors.len() {
        return Err(BaselineError::Config(format!(
            "anchor {} beyond the filtered range",
            anchors[next_anchor]
        )));
    }
    Ok(out)
}
