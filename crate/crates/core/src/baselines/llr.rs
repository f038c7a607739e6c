//! Kernel-weighted local linear regression of tail loads on the anchor
//! price.
//!
//! The neighborhood is temporal: past periods weighted by a Gaussian kernel
//! on the circular within-day clock distance, looking back a bounded number
//! of days. Only fully realized observations (tail inside the past) enter
//! the fit, so estimates at test anchors are causal.

use alloc::format;
use alloc::vec::Vec;

use super::BaselineError;
use crate::data::{SeriesDataset, PERIODS_PER_DAY};
use crate::estimator::ELASTICITY_DIM;
use crate::metrics::ElasticityVector;
use crate::numeric::exp;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LlrConfig {
    /// Gaussian kernel bandwidth on the clock distance, in periods.
    pub bandwidth_periods: f64,
    /// Ridge term on the slope coefficient (the intercept is unpenalized).
    pub ridge: f64,
    /// How many days of history feed each anchor's fit.
    pub lookback_days: usize,
}

impl Default for LlrConfig {
    fn default() -> Self {
        Self {
            bandwidth_periods: 12.0,
            ridge: 1e-6,
            lookback_days: 45,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LlrOutput {
    pub vectors: Vec<ElasticityVector>,
    /// Anchors whose local system was singular; their vectors are zero.
    pub flagged: Vec<usize>,
}

#[inline]
fn clock_distance(a: u32, b: u32) -> f64 {
    let d = (a as i64 - b as i64).unsigned_abs() as f64;
    d.min(PERIODS_PER_DAY as f64 - d)
}

/// One elasticity vector per anchor, each from nine weighted ridge
/// regressions of `load[t + tau]` on `price[t]` over the neighborhood.
pub fn llr_estimate(
    ds: &SeriesDataset,
    anchors: &[usize],
    cfg: &LlrConfig,
) -> Result<LlrOutput, BaselineError> {
    if !(cfg.bandwidth_periods > 0.0) {
        return Err(BaselineError::Config(
            "bandwidth_periods must be positive".into(),
        ));
    }
    if cfg.ridge < 0.0 {
        return Err(BaselineError::Config("ridge must be non-negative".into()));
    }
    if cfg.lookback_days == 0 {
        return Err(BaselineError::Config(
            "lookback_days must be at least 1".into(),
        ));
    }
    let records = ds.records();
    let mut vectors = Vec::with_capacity(anchors.len());
    let mut flagged = Vec::new();
    for &a in anchors {
        if a + ELASTICITY_DIM > records.len() {
            return Err(BaselineError::Config(format!(
                "anchor {a} has no full elasticity tail"
            )));
        }
        let q_a = records[a].period_index();
        let lambda_a = records[a].price;
        let earliest = a.saturating_sub(cfg.lookback_days * PERIODS_PER_DAY);
        // shared moments of the weighted design
        let mut sw = 0.0;
        let mut sx = 0.0;
        let mut sxx = 0.0;
        let mut sy = [0.0; ELASTICITY_DIM];
        let mut sxy = [0.0; ELASTICITY_DIM];
        let latest = a.saturating_sub(ELASTICITY_DIM);
        for t in earliest..latest {
            let dq = clock_distance(records[t].period_index(), q_a) / cfg.bandwidth_periods;
            let w = exp(-0.5 * dq * dq);
            if w < 1e-8 {
                continue;
            }
            let x = records[t].price;
            sw += w;
            sx += w * x;
            sxx += w * x * x;
            for tau in 0..ELASTICITY_DIM {
                let y = records[t + tau].load;
                sy[tau] += w * y;
                sxy[tau] += w * x * y;
            }
        }
        let a11 = sxx + cfg.ridge;
        let det = sw * a11 - sx * sx;
        let mut values = [0.0; ELASTICITY_DIM];
        if det.abs() < 1e-12 || sw == 0.0 {
            flagged.push(a);
        } else {
            for tau in 0..ELASTICITY_DIM {
                // solve [sw sx; sx a11] [intercept; slope] = [sy; sxy]
                let slope = (sw * sxy[tau] - sx * sy[tau]) / det;
                values[tau] = slope * lambda_a / records[a + tau].load;
            }
        }
        vectors.push(ElasticityVector {
            anchor_timestamp: records[a].timestamp,
            values,
        });
    }
    Ok(LlrOutput { vectors, flagged })
}
