//! Evaluation metrics: overall RMSE/MAE over flattened elasticity vectors
//! plus own/cross and spike/normal breakdowns that decompose exactly.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDateTime;

use crate::numeric::sqrt;

/// Nine elasticities anchored at one period: the own-elasticity followed by
/// eight cross-elasticities.
#[derive(Clone, Debug, PartialEq)]
pub struct ElasticityVector {
    pub anchor_timestamp: NaiveDateTime,
    pub values: [f64; 9],
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("anchor mismatch: {0}")]
    AnchorMismatch(String),
    #[error("no methods evaluated")]
    NoMethods,
    #[error("empty estimate set")]
    Empty,
}

/// Accuracy report for one method.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    pub method: String,
    pub rmse: f64,
    pub mae: f64,
    pub own_rmse: f64,
    pub cross_rmse: f64,
    /// Absent when no anchor price reaches the spike threshold.
    pub spike_rmse: Option<f64>,
    /// Absent when every anchor is a spike anchor.
    pub normal_rmse: Option<f64>,
    pub n_anchors: usize,
    pub n_entries: usize,
    pub n_own: usize,
    pub n_cross: usize,
    pub n_spike_entries: usize,
    pub n_normal_entries: usize,
    pub n_spike_anchors: usize,
    pub spike_threshold: f64,
    pub seed: u64,
    /// Serialized run configuration, echoed for reproducibility.
    pub config_echo: String,
}

fn check_alignment(
    estimates: &[ElasticityVector],
    truth: &[ElasticityVector],
) -> Result<(), EvalError> {
    if estimates.is_empty() {
        return Err(EvalError::Empty);
    }
    if estimates.len() != truth.len() {
        return Err(EvalError::AnchorMismatch(format!(
            "{} estimates vs {} truth vectors",
            estimates.len(),
            truth.len()
        )));
    }
    for (e, t) in estimates.iter().zip(truth) {
        if e.anchor_timestamp != t.anchor_timestamp {
            return Err(EvalError::AnchorMismatch(format!(
                "estimate at {} paired with truth at {}",
                e.anchor_timestamp, t.anchor_timestamp
            )));
        }
    }
    Ok(())
}

/// Overall `(rmse, mae)` over all nine entries of all aligned anchors.
pub fn compute_metrics(
    estimates: &[ElasticityVector],
    truth: &[ElasticityVector],
) -> Result<(f64, f64), EvalError> {
    check_alignment(estimates, truth)?;
    let mut sq = 0.0;
    let mut abs = 0.0;
    let mut n = 0usize;
    for (e, t) in estimates.iter().zip(truth) {
        for k in 0..9 {
            let d = e.values[k] - t.values[k];
            sq += d * d;
            abs += d.abs();
            n += 1;
        }
    }
    Ok((sqrt(sq / n as f64), abs / n as f64))
}

fn rmse_of(sq_sum: f64, n: usize) -> Option<f64> {
    if n == 0 {
        None
    } else {
        Some(sqrt(sq_sum / n as f64))
    }
}

/// Builds the full report. The own bucket holds the first entry of every
/// vector, the cross bucket the remaining eight; the spike bucket holds all
/// entries of anchors whose price reaches the threshold. Empty buckets are
/// reported as absent, not zero.
#[allow(clippy::too_many_arguments)]
pub fn breakdown(
    method: &str,
    estimates: &[ElasticityVector],
    truth: &[ElasticityVector],
    anchor_prices: &[f64],
    spike_threshold: f64,
    seed: u64,
    config_echo: String,
) -> Result<MetricReport, EvalError> {
    check_alignment(estimates, truth)?;
    if anchor_prices.len() != estimates.len() {
        return Err(EvalError::AnchorMismatch(format!(
            "{} anchor prices vs {} estimates",
            anchor_prices.len(),
            estimates.len()
        )));
    }
    let (rmse, mae) = compute_metrics(estimates, truth)?;
    let mut own_sq = 0.0;
    let mut cross_sq = 0.0;
    let mut spike_sq = 0.0;
    let mut normal_sq = 0.0;
    let mut n_own = 0;
    let mut n_cross = 0;
    let mut n_spike = 0;
    let mut n_normal = 0;
    let mut n_spike_anchors = 0;
    for ((e, t), price) in estimates.iter().zip(truth).zip(anchor_prices) {
        let spike = *price >= spike_threshold;
        if spike {
            n_spike_anchors += 1;
        }
        for k in 0..9 {
            let d = e.values[k] - t.values[k];
            let d2 = d * d;
            if k == 0 {
                own_sq += d2;
                n_own += 1;
            } else {
                cross_sq += d2;
                n_cross += 1;
            }
            if spike {
                spike_sq += d2;
                n_spike += 1;
            } else {
                normal_sq += d2;
                n_normal += 1;
            }
        }
    }
    Ok(MetricReport {
        method: String::from(method),
        rmse,
        mae,
        own_rmse: rmse_of(own_sq, n_own).unwrap_or(0.0),
        cross_rmse: rmse_of(cross_sq, n_cross).unwrap_or(0.0),
        spike_rmse: rmse_of(spike_sq, n_spike),
        normal_rmse: rmse_of(normal_sq, n_normal),
        n_anchors: estimates.len(),
        n_entries: estimates.len() * 9,
        n_own,
        n_cross,
        n_spike_entries: n_spike,
        n_normal_entries: n_normal,
        n_spike_anchors,
        spike_threshold,
        seed,
        config_echo,
    })
}

/// Nearest-rank percentile (`p` in (0, 1]) over a copy of the values.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty());
    assert!(p > 0.0 && p <= 1.0);
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN"));
    let rank = crate::numeric::ceil(p * sorted.len() as f64) as usize;
    sorted[rank.saturating_sub(1).min(sorted.len() - 1)]
}
