//! Two-stage Siamese estimation pipeline.
//!
//! Stage 1 trains a price-response network on observed loads. Its forward
//! passes under anchor-price perturbations produce synthetic elasticity
//! targets by a secant-line rule, and a reliability filter assigns each
//! sample a weighting factor from the stage-1 prediction accuracy. Stage 2
//! re-uses the stage-1 cell weights verbatim (frozen) and trains a fresh
//! dense head on the surviving weighted synthetic targets; after that, a
//! single forward pass of the stage-2 network estimates the elasticity
//! vector directly.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::data::{Sample, Scaler, FEAT_PRICE};
use crate::linalg::Mat;
use crate::metrics::ElasticityVector;
use crate::nn::{
    forward_sequence, init_params, train, FitReport, LossKind, NetworkMeta, NetworkParams, NnError,
    TrainConfig, TrainSample, TrainableScope,
};

/// Elasticity horizon: the own-elasticity plus eight cross-elasticities.
pub const ELASTICITY_DIM: usize = 9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimatorError {
    #[error("no reliable synthetic data; lower eta_th or improve stage 1")]
    NoReliableSynthetic,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-positive anchor price {price} at sample {sample}")]
    NonPositiveAnchorPrice { sample: usize, price: f64 },
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Hyper-parameters of the two-stage pipeline.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimatorConfig {
    /// Price perturbation of the secant generator, USD/MWh.
    pub d_lambda: f64,
    /// Stage-1 accuracy threshold below which samples are discarded.
    pub eta_th: f64,
    /// Weighting-factor adjustment coefficient.
    pub alpha: f64,
    pub t_in: usize,
    pub n_cell: usize,
    /// Dense width of the stage-1 (load) network.
    pub n_den_p: usize,
    /// Dense width of the stage-2 (elasticity) network.
    pub n_den_e: usize,
    pub stage1: TrainConfig,
    pub stage2: TrainConfig,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            d_lambda: 3.0,
            eta_th: 0.8,
            alpha: 0.5,
            t_in: 25,
            n_cell: 32,
            n_den_p: 32,
            n_den_e: 48,
            stage1: TrainConfig {
                batch_size: 256,
                max_iters: 5000,
                learning_rate: 1e-3,
                seed: 1,
                loss: LossKind::PlainMse,
                trainable_scope: TrainableScope::All,
            },
            stage2: TrainConfig {
                batch_size: 256,
                max_iters: 5000,
                learning_rate: 1e-3,
                seed: 2,
                loss: LossKind::WeightedMse,
                trainable_scope: TrainableScope::HeadOnly,
            },
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<(), EstimatorError> {
        if !(self.d_lambda > 0.0) {
            return Err(EstimatorError::Config("d_lambda must be positive".into()));
        }
        if !(self.eta_th > 0.0 && self.eta_th <= 1.0) {
            return Err(EstimatorError::Config("eta_th must lie in (0, 1]".into()));
        }
        if !(self.alpha > 0.0) {
            return Err(EstimatorError::Config("alpha must be positive".into()));
        }
        if self.t_in < ELASTICITY_DIM {
            return Err(EstimatorError::Config(format!(
                "t_in must be at least {ELASTICITY_DIM}"
            )));
        }
        if self.n_cell == 0 || self.n_den_p == 0 || self.n_den_e == 0 {
            return Err(EstimatorError::Config(
                "network widths must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn stage1_meta(&self) -> NetworkMeta {
        NetworkMeta {
            n_in: crate::data::N_FEATURES,
            n_cell: self.n_cell,
            n_den: self.n_den_p,
            t_in: self.t_in,
            t_out: ELASTICITY_DIM,
        }
    }

    pub fn stage2_meta(&self) -> NetworkMeta {
        NetworkMeta {
            n_den: self.n_den_e,
            ..self.stage1_meta()
        }
    }
}

/// A synthetic elasticity sample produced by the generator and filter.
#[derive(Clone, Debug)]
pub struct SyntheticSample {
    pub base: Sample,
    pub targets: [f64; ELASTICITY_DIM],
    /// Stage-1 prediction accuracy of the unperturbed window.
    pub eta: f64,
    /// Weighting factor; zero means filtered out.
    pub wf: f64,
}

/// Both trained networks plus the preprocessing state needed at inference.
#[derive(Clone, Debug)]
pub struct SiameseBundle {
    pub params_p: NetworkParams,
    pub params_e: NetworkParams,
    pub scaler: Scaler,
    pub config: EstimatorConfig,
}

fn to_train_samples(samples: &[Sample], scaler: &Scaler) -> Vec<TrainSample> {
    samples
        .iter()
        .map(|s| TrainSample {
            window: s.window.clone(),
            targets: s.target_loads.iter().map(|p| scaler.scale_load(*p)).collect(),
            weight: 1.0,
        })
        .collect()
}

/// Stage 1: trains the price-response network on scaled loads with plain
/// MSE over the tail outputs.
pub fn train_stage1(
    samples: &[Sample],
    validation: Option<&[Sample]>,
    scaler: &Scaler,
    cfg: &EstimatorConfig,
) -> Result<(NetworkParams, FitReport), EstimatorError> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(EstimatorError::Config("no stage-1 samples".into()));
    }
    let mut params = init_params(cfg.stage1_meta(), cfg.stage1.seed);
    let train_set = to_train_samples(samples, scaler);
    let val_set = validation.map(|v| to_train_samples(v, scaler));
    let stage1_cfg = TrainConfig {
        loss: LossKind::PlainMse,
        trainable_scope: TrainableScope::All,
        ..cfg.stage1.clone()
    };
    let report = train(&mut params, &train_set, val_set.as_deref(), &stage1_cfg)?;
    Ok((params, report))
}

/// Encoding vectors (the intermediate states of the tail steps) of one
/// window under the given network.
pub fn encode(window: &Mat, params: &NetworkParams) -> Result<Mat, NnError> {
    forward_sequence(window, params).map(|(_, enc)| enc)
}

/// Secant-line elasticities from a pair of perturbed load predictions:
/// `e_tau = lambda / d_lambda * (p_plus - p_minus) / (2 p_recorded)`.
///
/// Exact on affine price responses, independent of `d_lambda`, and
/// antisymmetric under swapping the perturbed predictions.
pub fn secant_elasticities(
    anchor_price: f64,
    d_lambda: f64,
    pred_plus: &[f64],
    pred_minus: &[f64],
    recorded: &[f64],
) -> [f64; ELASTICITY_DIM] {
    debug_assert_eq!(pred_plus.len(), ELASTICITY_DIM);
    debug_assert_eq!(pred_minus.len(), ELASTICITY_DIM);
    debug_assert_eq!(recorded.len(), ELASTICITY_DIM);
    let mut out = [0.0; ELASTICITY_DIM];
    for tau in 0..ELASTICITY_DIM {
        out[tau] =
            anchor_price / d_lambda * (pred_plus[tau] - pred_minus[tau]) / (2.0 * recorded[tau]);
    }
    out
}

/// Stage-1 accuracy over the sample's own tail:
/// `eta = 1 - mean(((p_hat - p) / p)^2)` on raw loads.
pub fn accuracy_eta(pred_raw: &[f64], recorded: &[f64]) -> f64 {
    debug_assert_eq!(pred_raw.len(), recorded.len());
    let mut acc = 0.0;
    for (p_hat, p) in pred_raw.iter().zip(recorded) {
        let rel = (p_hat - p) / p;
        acc += rel * rel;
    }
    1.0 - acc / recorded.len() as f64
}

/// Indicator-gated weighting factor: `WF = I(eta >= eta_th) / (eta + alpha)`.
/// The boundary accuracy is kept.
pub fn weight_from_eta(eta: f64, eta_th: f64, alpha: f64) -> f64 {
    if eta >= eta_th {
        1.0 / (eta + alpha)
    } else {
        0.0
    }
}

fn perturbed_window(sample: &Sample, scaler: &Scaler, delta: f64) -> Mat {
    let mut window = sample.window.clone();
    let step = sample.anchor_step();
    // re-normalized raw perturbation; excursions outside [0, 1] are kept
    let scaled = scaler.scale_price(sample.anchor_price + delta);
    window.set(step, FEAT_PRICE, scaled);
    window
}

fn unscaled_outputs(
    window: &Mat,
    params: &NetworkParams,
    scaler: &Scaler,
) -> Result<Vec<f64>, NnError> {
    let (outputs, _) = forward_sequence(window, params)?;
    Ok(outputs.iter().map(|y| scaler.unscale_load(*y)).collect())
}

/// Runs the secant generator for one sample: the anchor-step price feature
/// is shifted by +/- d_lambda in raw USD, re-normalized without clipping,
/// and pushed through the stage-1 network.
pub fn generate_synthetic(
    sample: &Sample,
    params_p: &NetworkParams,
    d_lambda: f64,
    scaler: &Scaler,
) -> Result<[f64; ELASTICITY_DIM], EstimatorError> {
    if !(sample.anchor_price > 0.0) {
        return Err(EstimatorError::NonPositiveAnchorPrice {
            sample: sample.anchor,
            price: sample.anchor_price,
        });
    }
    let plus = unscaled_outputs(&perturbed_window(sample, scaler, d_lambda), params_p, scaler)?;
    let minus = unscaled_outputs(&perturbed_window(sample, scaler, -d_lambda), params_p, scaler)?;
    Ok(secant_elasticities(
        sample.anchor_price,
        d_lambda,
        &plus,
        &minus,
        &sample.target_loads,
    ))
}

/// Stage-1 accuracy and weighting factor for one sample.
pub fn weighting_factor(
    sample: &Sample,
    params_p: &NetworkParams,
    scaler: &Scaler,
    eta_th: f64,
    alpha: f64,
) -> Result<(f64, f64), EstimatorError> {
    let pred = unscaled_outputs(&sample.window, params_p, scaler)?;
    let eta = accuracy_eta(&pred, &sample.target_loads);
    Ok((weight_from_eta(eta, eta_th, alpha), eta))
}

/// Generator plus filter over a whole sample set. Samples with
/// non-positive anchor prices are kept with zero weight.
pub fn build_synthetic_set(
    samples: &[Sample],
    params_p: &NetworkParams,
    scaler: &Scaler,
    cfg: &EstimatorConfig,
) -> Result<Vec<SyntheticSample>, EstimatorError> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(samples.len());
    for s in samples {
        let (wf, eta) = weighting_factor(s, params_p, scaler, cfg.eta_th, cfg.alpha)?;
        let (targets, wf) = if s.anchor_price > 0.0 {
            (generate_synthetic(s, params_p, cfg.d_lambda, scaler)?, wf)
        } else {
            ([0.0; ELASTICITY_DIM], 0.0)
        };
        out.push(SyntheticSample {
            base: s.clone(),
            targets,
            eta,
            wf,
        });
    }
    Ok(out)
}

/// Stage 2: freezes the stage-1 cell, initializes a fresh dense head of
/// width `n_den_e`, and trains head-only with the weighted MSE on the
/// surviving synthetic samples.
pub fn train_stage2(
    synthetic: &[SyntheticSample],
    params_p: &NetworkParams,
    cfg: &EstimatorConfig,
) -> Result<(NetworkParams, FitReport), EstimatorError> {
    cfg.validate()?;
    let survivors: Vec<&SyntheticSample> = synthetic.iter().filter(|s| s.wf > 0.0).collect();
    if survivors.is_empty() {
        return Err(EstimatorError::NoReliableSynthetic);
    }
    let fresh = init_params(cfg.stage2_meta(), cfg.stage2.seed);
    let mut params_e = NetworkParams {
        meta: cfg.stage2_meta(),
        cell: params_p.cell.clone(),
        head: fresh.head,
    };
    let train_set: Vec<TrainSample> = survivors
        .iter()
        .map(|s| TrainSample {
            window: s.base.window.clone(),
            targets: s.targets.to_vec(),
            weight: s.wf,
        })
        .collect();
    let stage2_cfg = TrainConfig {
        loss: LossKind::WeightedMse,
        trainable_scope: TrainableScope::HeadOnly,
        ..cfg.stage2.clone()
    };
    let report = train(&mut params_e, &train_set, None, &stage2_cfg)?;
    Ok((params_e, report))
}

/// Single forward pass of the stage-2 network; the output at tail step tau
/// is the elasticity `e_tau` anchored at the sample's anchor period.
pub fn estimate(sample: &Sample, bundle: &SiameseBundle) -> Result<ElasticityVector, NnError> {
    let (outputs, _) = forward_sequence(&sample.window, &bundle.params_e)?;
    let mut values = [0.0; ELASTICITY_DIM];
    values.copy_from_slice(&outputs);
    Ok(ElasticityVector {
        anchor_timestamp: sample.anchor_timestamp,
        values,
    })
}

/// Runs the full two-stage pipeline and returns the bundle.
pub fn fit_bundle(
    train_samples: &[Sample],
    validation: Option<&[Sample]>,
    scaler: &Scaler,
    cfg: &EstimatorConfig,
) -> Result<(SiameseBundle, FitReport, FitReport), EstimatorError> {
    let (params_p, report1) = train_stage1(train_samples, validation, scaler, cfg)?;
    let synthetic = build_synthetic_set(train_samples, &params_p, scaler, cfg)?;
    let (params_e, report2) = train_stage2(&synthetic, &params_p, cfg)?;
    Ok((
        SiameseBundle {
            params_p,
            params_e,
            scaler: scaler.clone(),
            config: cfg.clone(),
        },
        report1,
        report2,
    ))
}
