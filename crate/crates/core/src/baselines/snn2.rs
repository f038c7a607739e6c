//! Two-stage estimation with fully-connected networks.
//!
//! Same pipeline as the sequence estimator — stage-1 load regression,
//! secant generator, reliability filter, stage-2 weighted training with the
//! first layer copied and frozen — but the input is the nine features at
//! the anchor period only, with no sequence context. The generator and
//! filter arithmetic is shared with the main estimator.

use alloc::vec;
use alloc::vec::Vec;

use super::mlp::{mlp_train, MlpParams, MlpTrainConfig};
use super::BaselineError;
use crate::data::{Sample, Scaler, FEAT_PRICE};
use crate::estimator::{
    accuracy_eta, secant_elasticities, weight_from_eta, EstimatorError, ELASTICITY_DIM,
};
use crate::metrics::ElasticityVector;
use crate::nn::TrainConfig;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Snn2Config {
    /// First hidden width, shared (copied and frozen) between the stages.
    pub shared_width: usize,
    /// Second hidden width of the load network.
    pub load_hidden: usize,
    /// Second hidden width of the elasticity network.
    pub els_hidden: usize,
    pub d_lambda: f64,
    pub eta_th: f64,
    pub alpha: f64,
    pub stage1: TrainConfig,
    pub stage2: TrainConfig,
}

impl Default for Snn2Config {
    fn default() -> Self {
        Self {
            shared_width: 32,
            load_hidden: 32,
            els_hidden: 48,
            d_lambda: 3.0,
            eta_th: 0.8,
            alpha: 0.5,
            stage1: TrainConfig {
                seed: 11,
                ..TrainConfig::default()
            },
            stage2: TrainConfig {
                seed: 12,
                ..TrainConfig::default()
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct Snn2Bundle {
    pub load_net: MlpParams,
    pub els_net: MlpParams,
    pub config: Snn2Config,
}

fn anchor_features(sample: &Sample) -> Vec<f64> {
    sample.window.row(sample.anchor_step()).to_vec()
}

fn mlp_cfg(t: &TrainConfig, weighted: bool) -> MlpTrainConfig {
    MlpTrainConfig {
        batch_size: t.batch_size,
        max_iters: t.max_iters,
        learning_rate: t.learning_rate,
        seed: t.seed,
        weighted,
    }
}

/// Trains both dense stages on the training samples.
pub fn snn2_fit(
    samples: &[Sample],
    scaler: &Scaler,
    cfg: &Snn2Config,
) -> Result<Snn2Bundle, BaselineError> {
    if samples.is_empty() {
        return Err(BaselineError::Config("no training samples".into()));
    }
    if !(cfg.d_lambda > 0.0) || !(cfg.eta_th > 0.0 && cfg.eta_th <= 1.0) || !(cfg.alpha > 0.0) {
        return Err(BaselineError::Config(
            "d_lambda, eta_th, and alpha must be positive (eta_th at most 1)".into(),
        ));
    }
    let n_in = crate::data::N_FEATURES;
    let inputs: Vec<Vec<f64>> = samples.iter().map(anchor_features).collect();
    let targets: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| s.target_loads.iter().map(|p| scaler.scale_load(*p)).collect())
        .collect();

    // stage 1: anchor features -> nine tail loads
    let mut load_net = MlpParams::init(
        &[n_in, cfg.shared_width, cfg.load_hidden, ELASTICITY_DIM],
        cfg.stage1.seed,
    );
    let uniform = vec![1.0; samples.len()];
    mlp_train(
        &mut load_net,
        &inputs,
        &targets,
        &uniform,
        &[false, false, false],
        &mlp_cfg(&cfg.stage1, false),
    )?;

    // generator and filter, sharing the secant and weighting arithmetic
    let mut synth_targets = Vec::with_capacity(samples.len());
    let mut weights = Vec::with_capacity(samples.len());
    for (sample, x) in samples.iter().zip(&inputs) {
        let pred: Vec<f64> = load_net
            .forward(x)
            .iter()
            .map(|y| scaler.unscale_load(*y))
            .collect();
        let eta = accuracy_eta(&pred, &sample.target_loads);
        let mut wf = weight_from_eta(eta, cfg.eta_th, cfg.alpha);
        let e = if sample.anchor_price > 0.0 {
            let mut xp = x.clone();
            xp[FEAT_PRICE] = scaler.scale_price(sample.anchor_price + cfg.d_lambda);
            let mut xm = x.clone();
            xm[FEAT_PRICE] = scaler.scale_price(sample.anchor_price - cfg.d_lambda);
            let plus: Vec<f64> = load_net
                .forward(&xp)
                .iter()
                .map(|y| scaler.unscale_load(*y))
                .collect();
            let minus: Vec<f64> = load_net
                .forward(&xm)
                .iter()
                .map(|y| scaler.unscale_load(*y))
                .collect();
            secant_elasticities(
                sample.anchor_price,
                cfg.d_lambda,
                &plus,
                &minus,
                &sample.target_loads,
            )
        } else {
            wf = 0.0;
            [0.0; ELASTICITY_DIM]
        };
        synth_targets.push(e.to_vec());
        weights.push(wf);
    }
    let survivors = weights.iter().filter(|w| **w > 0.0).count();
    if survivors == 0 {
        return Err(BaselineError::Estimator(
            EstimatorError::NoReliableSynthetic,
        ));
    }

    // stage 2: fresh network, first layer copied from stage 1 and frozen
    let mut els_net = MlpParams::init(
        &[n_in, cfg.shared_width, cfg.els_hidden, ELASTICITY_DIM],
        cfg.stage2.seed,
    );
    els_net.layers[0] = load_net.layers[0].clone();
    let kept: Vec<usize> = (0..samples.len()).filter(|i| weights[*i] > 0.0).collect();
    let k_inputs: Vec<Vec<f64>> = kept.iter().map(|&i| inputs[i].clone()).collect();
    let k_targets: Vec<Vec<f64>> = kept.iter().map(|&i| synth_targets[i].clone()).collect();
    let k_weights: Vec<f64> = kept.iter().map(|&i| weights[i]).collect();
    mlp_train(
        &mut els_net,
        &k_inputs,
        &k_targets,
        &k_weights,
        &[true, false, false],
        &mlp_cfg(&cfg.stage2, true),
    )?;
    debug_assert_eq!(els_net.layers[0], load_net.layers[0]);

    Ok(Snn2Bundle {
        load_net,
        els_net,
        config: cfg.clone(),
    })
}

/// One forward pass of the elasticity network per sample.
pub fn snn2_estimate(
    samples: &[Sample],
    bundle: &Snn2Bundle,
) -> Result<Vec<ElasticityVector>, BaselineError> {
    samples
        .iter()
        .map(|s| {
            let y = bundle.els_net.forward(&anchor_features(s));
            if y.len() != ELASTICITY_DIM {
                return Err(BaselineError::Config(
                    "elasticity network output width mismatch".into(),
                ));
            }
            let mut values = [0.0; ELASTICITY_DIM];
            values.copy_from_slice(&y);
            Ok(ElasticityVector {
                anchor_timestamp: s.anchor_timestamp,
                values,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::tests::synthetic_records;
    use crate::data::{build_samples, SeriesDataset};

    fn fixtures() -> (Vec<Sample>, Scaler) {
        let ds = SeriesDataset::new(synthetic_records(5)).unwrap();
        let scaler = Scaler::fit(&ds).unwrap();
        let samples = build_samples(&ds, &scaler, 12, 9).unwrap();
        (samples, scaler)
    }

    fn quick_cfg() -> Snn2Config {
        Snn2Config {
            shared_width: 12,
            load_hidden: 12,
            els_hidden: 16,
            stage1: TrainConfig {
                batch_size: 32,
                max_iters: 400,
                learning_rate: 5e-3,
                seed: 21,
                ..TrainConfig::default()
            },
            stage2: TrainConfig {
                batch_size: 32,
                max_iters: 400,
                learning_rate: 5e-3,
                seed: 22,
                ..TrainConfig::default()
            },
            ..Snn2Config::default()
        }
    }

    #[test]
    fn shared_layer_is_frozen_copy_of_stage1() {
        let (samples, scaler) = fixtures();
        let bundle = snn2_fit(&samples, &scaler, &quick_cfg()).unwrap();
        assert_eq!(bundle.els_net.layers[0], bundle.load_net.layers[0]);
        assert_eq!(bundle.els_net.layers[1].w.rows(), 16);
    }

    #[test]
    fn uses_only_anchor_period_features() {
        // perturbing any non-anchor window row must leave estimates intact
        let (samples, scaler) = fixtures();
        let bundle = snn2_fit(&samples, &scaler, &quick_cfg()).unwrap();
        let mut sample = samples[8].clone();
        let est_before = snn2_estimate(core::slice::from_ref(&sample), &bundle).unwrap();
        for step in 0..sample.window.rows() {
            if step == sample.anchor_step() {
                continue;
            }
            for c in 0..sample.window.cols() {
                sample.window.set(step, c, 0.123 + step as f64);
            }
        }
        let est_after = snn2_estimate(core::slice::from_ref(&sample), &bundle).unwrap();
        assert_eq!(est_before[0].values, est_after[0].values);
    }

    #[test]
    fn zero_output_layer_gives_constant_vectors() {
        let (samples, scaler) = fixtures();
        let mut bundle = snn2_fit(&samples, &scaler, &quick_cfg()).unwrap();
        let last = bundle.els_net.layers.len() - 1;
        bundle.els_net.layers[last].w.fill(0.0);
        bundle.els_net.layers[last].b = alloc::vec![0.25; 9];
        let est = snn2_estimate(&samples[..3], &bundle).unwrap();
        for e in est {
            assert_eq!(e.values, [0.25; 9]);
        }
    }
}
