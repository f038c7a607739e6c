//! Mini-batch training loop.
//!
//! One "iteration" is one mini-batch step. Batches are drawn without
//! replacement from a per-epoch shuffle of the sample order, reshuffled
//! with the run seed, and the loop runs exactly `max_iters` iterations.
//! With a frozen cell the tail encodings of every sample are computed once
//! up front and the head is trained on them, which yields gradients
//! identical to the full backward pass.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::backprop::{bptt_gradients, Gradients, TrainSample};
use super::forward::{head_forward, run_window, ForwardTrace};
use super::loss::LossKind;
use super::optimizer::{optimizer_step, OptState};
use super::params::NetworkParams;
use super::NnError;
use crate::linalg::Mat;

/// Which parameter blocks the optimizer may touch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum TrainableScope {
    #[default]
    All,
    HeadOnly,
}

/// Training hyper-parameters.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_iters: usize,
    pub learning_rate: f64,
    pub seed: u64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub loss: LossKind,
    #[cfg_attr(feature = "serde", serde(default))]
    pub trainable_scope: TrainableScope,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 256,
            max_iters: 5000,
            learning_rate: 1e-3,
            seed: 0,
            loss: LossKind::PlainMse,
            trainable_scope: TrainableScope::All,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.batch_size == 0 || self.max_iters == 0 {
            return Err(NnError::Config(
                "batch_size and max_iters must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(NnError::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Loss trajectory of a training run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitReport {
    /// Batch loss at every iteration, evaluated before the update.
    pub train_loss: Vec<f64>,
    /// `(iteration, loss)` pairs on the validation set, if one was given.
    pub val_loss: Vec<(usize, f64)>,
    pub final_train_loss: f64,
}

fn shuffle(order: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
}

struct BatchSchedule {
    order: Vec<usize>,
    pos: usize,
    rng: ChaCha8Rng,
}

impl BatchSchedule {
    fn new(n: usize, seed: u64) -> Self {
        Self {
            order: (0..n).collect(),
            pos: n, // forces a shuffle before the first batch
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn next_batch(&mut self, batch_size: usize) -> &[usize] {
        if self.pos >= self.order.len() {
            shuffle(&mut self.order, &mut self.rng);
            self.pos = 0;
        }
        let end = (self.pos + batch_size).min(self.order.len());
        let slice = &self.order[self.pos..end];
        self.pos = end;
        slice
    }
}

fn eval_loss(
    samples: &[TrainSample],
    params: &NetworkParams,
    cfg: &TrainConfig,
) -> Result<f64, NnError> {
    super::backprop::batch_loss(samples, params, cfg)
}

/// Trains `params` in place and reports the loss history.
///
/// A non-finite loss aborts with the iteration index in the error message.
pub fn train(
    params: &mut NetworkParams,
    samples: &[TrainSample],
    validation: Option<&[TrainSample]>,
    cfg: &TrainConfig,
) -> Result<FitReport, NnError> {
    cfg.validate()?;
    params.validate()?;
    if samples.is_empty() {
        return Err(NnError::Config("no training samples".into()));
    }
    if cfg.loss == LossKind::WeightedMse && samples.iter().all(|s| s.weight == 0.0) {
        return Err(NnError::EmptyLoss);
    }
    if cfg.trainable_scope == TrainableScope::HeadOnly {
        return train_head_cached(params, samples, validation, cfg);
    }

    let mut report = FitReport::default();
    let mut schedule = BatchSchedule::new(samples.len(), cfg.seed);
    let mut opt = OptState::new(params);
    let val_every = (cfg.max_iters / 20).max(1);
    let mut batch: Vec<TrainSample> = Vec::with_capacity(cfg.batch_size);

    for iter in 0..cfg.max_iters {
        let idxs = schedule.next_batch(cfg.batch_size);
        batch.clear();
        batch.extend(idxs.iter().map(|&i| samples[i].clone()));
        let bg = bptt_gradients(&batch, params, cfg).map_err(|e| match e {
            NnError::NonFinite { what, sample } => NnError::Config(alloc::format!(
                "diverged at iteration {iter}: non-finite {what} (batch sample {sample})"
            )),
            other => other,
        })?;
        optimizer_step(params, &bg.grads, &mut opt, cfg);
        report.train_loss.push(bg.loss);
        if let Some(val) = validation {
            if iter % val_every == 0 || iter + 1 == cfg.max_iters {
                report.val_loss.push((iter, eval_loss(val, params, cfg)?));
            }
        }
    }
    report.final_train_loss = *report.train_loss.last().unwrap();
    Ok(report)
}

/// Head-only training over precomputed tail encodings.
fn train_head_cached(
    params: &mut NetworkParams,
    samples: &[TrainSample],
    validation: Option<&[TrainSample]>,
    cfg: &TrainConfig,
) -> Result<FitReport, NnError> {
    let m = params.meta;
    let tail_start = m.t_in - m.t_out;
    let mut trace = ForwardTrace::new(m.t_in, m.t_out, m.n_cell, m.n_den);
    let encode = |params: &NetworkParams,
                  set: &[TrainSample],
                  trace: &mut ForwardTrace|
     -> Result<Vec<Mat>, NnError> {
        let mut out = Vec::with_capacity(set.len());
        for (idx, s) in set.iter().enumerate() {
            if s.window.rows() != m.t_in || s.window.cols() != m.n_in {
                return Err(NnError::Config(alloc::format!(
                    "sample {idx}: window is {}x{}, expected {}x{}",
                    s.window.rows(),
                    s.window.cols(),
                    m.t_in,
                    m.n_in
                )));
            }
            run_window(&s.window, params, trace);
            let mut enc = Mat::zeros(m.t_out, m.n_cell);
            for tau in 0..m.t_out {
                enc.row_mut(tau).copy_from_slice(trace.h.row(tail_start + tau));
            }
            out.push(enc);
        }
        Ok(out)
    };
    let encodings = encode(params, samples, &mut trace)?;
    let val_encodings = match validation {
        Some(v) => Some(encode(params, v, &mut trace)?),
        None => None,
    };

    let weight_of = |s: &TrainSample| match cfg.loss {
        LossKind::PlainMse => 1.0,
        LossKind::WeightedMse => s.weight,
    };
    let head_loss = |params: &NetworkParams,
                     set: &[TrainSample],
                     encs: &[Mat],
                     hidden: &mut [f64]|
     -> Result<f64, NnError> {
        let wsum: f64 = set.iter().map(|s| weight_of(s) * m.t_out as f64).sum();
        if wsum <= 0.0 {
            return Err(NnError::EmptyLoss);
        }
        let mut loss = 0.0;
        for (s, enc) in set.iter().zip(encs) {
            let w = weight_of(s);
            for tau in 0..m.t_out {
                let y = head_forward(&params.head, enc.row(tau), hidden);
                let e = y - s.targets[tau];
                loss += w * e * e / wsum;
            }
        }
        Ok(loss)
    };

    let mut report = FitReport::default();
    let mut schedule = BatchSchedule::new(samples.len(), cfg.seed);
    let mut opt = OptState::new(params);
    let val_every = (cfg.max_iters / 20).max(1);
    let mut hidden = vec![0.0; m.n_den];
    let mut dz1 = vec![0.0; m.n_den];

    for iter in 0..cfg.max_iters {
        let idxs = schedule.next_batch(cfg.batch_size);
        let wsum: f64 = idxs
            .iter()
            .map(|&i| weight_of(&samples[i]) * m.t_out as f64)
            .sum();
        if wsum <= 0.0 {
            return Err(NnError::EmptyLoss);
        }
        let mut grads = Gradients::zeros(params);
        let mut loss = 0.0;
        for &i in idxs {
            let s = &samples[i];
            let w = weight_of(s);
            let enc = &encodings[i];
            for tau in 0..m.t_out {
                let h_t = enc.row(tau);
                let y = head_forward(&params.head, h_t, &mut hidden);
                if !y.is_finite() {
                    return Err(NnError::Config(alloc::format!(
                        "diverged at iteration {iter}: non-finite prediction (sample {i})"
                    )));
                }
                let e = y - s.targets[tau];
                loss += w * e * e / wsum;
                let dy = 2.0 * w * e / wsum;
                if w == 0.0 {
                    continue;
                }
                for d in 0..m.n_den {
                    grads.head.w_h2.row_mut(0)[d] += dy * hidden[d];
                    let da = params.head.w_h2.at(0, d) * dy;
                    dz1[d] = if hidden[d] > 0.0 { da } else { 0.0 };
                }
                grads.head.b_h2 += dy;
                grads.head.w_h1.add_outer(&dz1, h_t);
                for d in 0..m.n_den {
                    grads.head.b_h1[d] += dz1[d];
                }
            }
        }
        optimizer_step(params, &grads, &mut opt, cfg);
        report.train_loss.push(loss);
        if let (Some(val), Some(vencs)) = (validation, val_encodings.as_ref()) {
            if iter % val_every == 0 || iter + 1 == cfg.max_iters {
                report
                    .val_loss
                    .push((iter, head_loss(params, val, vencs, &mut hidden)?));
            }
        }
    }
    report.final_train_loss = *report.train_loss.last().unwrap();
    Ok(report)
}
