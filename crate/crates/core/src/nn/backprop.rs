//! Reverse accumulation through the unfolded sequence.
//!
//! Gradients are exact for the configured loss; the derivation is specific
//! to the fixed topology (cell layer, rectified dense layer, scalar output
//! per tail step). Batch reduction follows index order so that results are
//! reproducible.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::forward::{run_window, ForwardTrace};
use super::loss::LossKind;
use super::params::{DenseHeadParams, LstmCellParams, NetworkParams};
use super::train::{TrainConfig, TrainableScope};
use super::NnError;
use crate::linalg::Mat;

/// One training sample: a scaled feature window, one target per tail step,
/// and a non-negative sample weight (used by the weighted loss).
#[derive(Clone, Debug)]
pub struct TrainSample {
    pub window: Mat,
    pub targets: Vec<f64>,
    pub weight: f64,
}

/// Gradient blocks, same shapes as the parameters they correspond to.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub cell: LstmCellParams,
    pub head: DenseHeadParams,
}

impl Gradients {
    pub fn zeros(params: &NetworkParams) -> Self {
        let m = &params.meta;
        Self {
            cell: LstmCellParams::zeros(m.n_cell, m.n_in),
            head: DenseHeadParams::zeros(m.n_den, m.n_cell),
        }
    }

    pub fn is_finite(&self) -> bool {
        let c = &self.cell;
        let h = &self.head;
        c.w_f.is_finite()
            && c.w_i.is_finite()
            && c.w_o.is_finite()
            && c.w_c.is_finite()
            && c.v_f.is_finite()
            && c.v_i.is_finite()
            && c.v_o.is_finite()
            && c.v_c.is_finite()
            && c.b_f.iter().all(|v| v.is_finite())
            && c.b_i.iter().all(|v| v.is_finite())
            && c.b_o.iter().all(|v| v.is_finite())
            && c.b_c.iter().all(|v| v.is_finite())
            && h.w_h1.is_finite()
            && h.b_h1.iter().all(|v| v.is_finite())
            && h.w_h2.is_finite()
            && h.b_h2.is_finite()
    }
}

/// Gradients together with the loss value of the batch they came from.
#[derive(Clone, Debug)]
pub struct BatchGradients {
    pub grads: Gradients,
    pub loss: f64,
}

fn sample_weight(sample: &TrainSample, loss: LossKind) -> f64 {
    match loss {
        LossKind::PlainMse => 1.0,
        LossKind::WeightedMse => sample.weight,
    }
}

fn check_batch(batch: &[TrainSample], params: &NetworkParams) -> Result<(), NnError> {
    if batch.is_empty() {
        return Err(NnError::Config("empty batch".into()));
    }
    let m = &params.meta;
    for (idx, s) in batch.iter().enumerate() {
        if s.window.rows() != m.t_in || s.window.cols() != m.n_in {
            return Err(NnError::Config(format!(
                "sample {idx}: window is {}x{}, expected {}x{}",
                s.window.rows(),
                s.window.cols(),
                m.t_in,
                m.n_in
            )));
        }
        if s.targets.len() != m.t_out {
            return Err(NnError::Config(format!(
                "sample {idx}: {} targets, expected {}",
                s.targets.len(),
                m.t_out
            )));
        }
        if s.weight < 0.0 || !s.weight.is_finite() {
            return Err(NnError::Config(format!(
                "sample {idx}: weight must be finite and non-negative"
            )));
        }
    }
    Ok(())
}

/// Exact gradients of the configured loss over the batch.
///
/// With `trainable_scope = HeadOnly` the cell blocks come back as zeros and
/// the recursion through time is skipped entirely (the cell is frozen, so
/// those derivatives are not needed).
pub fn bptt_gradients(
    batch: &[TrainSample],
    params: &NetworkParams,
    cfg: &TrainConfig,
) -> Result<BatchGradients, NnError> {
    params.validate()?;
    check_batch(batch, params)?;
    let m = &params.meta;
    let tail_start = m.t_in - m.t_out;

    let weight_sum: f64 = batch
        .iter()
        .map(|s| sample_weight(s, cfg.loss) * m.t_out as f64)
        .sum();
    if weight_sum <= 0.0 {
        return Err(NnError::EmptyLoss);
    }

    let mut grads = Gradients::zeros(params);
    let mut loss = 0.0;
    let mut trace = ForwardTrace::new(m.t_in, m.t_out, m.n_cell, m.n_den);

    // Step-local buffers reused across samples.
    let mut dh = vec![0.0; m.n_cell];
    let mut dc = vec![0.0; m.n_cell];
    let mut da_f = vec![0.0; m.n_cell];
    let mut da_i = vec![0.0; m.n_cell];
    let mut da_o = vec![0.0; m.n_cell];
    let mut da_g = vec![0.0; m.n_cell];
    let mut dz1 = vec![0.0; m.n_den];

    for (idx, sample) in batch.iter().enumerate() {
        let w = sample_weight(sample, cfg.loss);
        run_window(&sample.window, params, &mut trace);

        let mut dy = vec![0.0; m.t_out];
        for tau in 0..m.t_out {
            let y = trace.outputs[tau];
            if !y.is_finite() {
                return Err(NnError::NonFinite {
                    what: "prediction",
                    sample: idx,
                });
            }
            let e = y - sample.targets[tau];
            loss += w * e * e / weight_sum;
            dy[tau] = 2.0 * w * e / weight_sum;
        }
        if w == 0.0 {
            continue;
        }

        dh.fill(0.0);
        dc.fill(0.0);
        for t in (0..m.t_in).rev() {
            if t >= tail_start {
                let tau = t - tail_start;
                let dyt = dy[tau];
                let hidden = trace.hidden.row(tau);
                let h_t = trace.h.row(t);
                // output layer
                for d in 0..m.n_den {
                    grads.head.w_h2.row_mut(0)[d] += dyt * hidden[d];
                }
                grads.head.b_h2 += dyt;
                // hidden layer (rectification gates the flow)
                for d in 0..m.n_den {
                    let da = params.head.w_h2.at(0, d) * dyt;
                    dz1[d] = if hidden[d] > 0.0 { da } else { 0.0 };
                }
                grads.head.w_h1.add_outer(&dz1, h_t);
                for d in 0..m.n_den {
                    grads.head.b_h1[d] += dz1[d];
                }
                if cfg.trainable_scope == TrainableScope::All {
                    params.head.w_h1.tr_matvec_add(&dz1, &mut dh);
                }
            }
            if cfg.trainable_scope == TrainableScope::HeadOnly {
                continue;
            }

            let x_t = sample.window.row(t);
            let h_prev = if t == 0 { None } else { Some(trace.h.row(t - 1)) };
            let c_prev = if t == 0 { None } else { Some(trace.c.row(t - 1)) };
            for j in 0..m.n_cell {
                let f = trace.f.at(t, j);
                let i = trace.i.at(t, j);
                let o = trace.o.at(t, j);
                let g = trace.g.at(t, j);
                let tc = trace.tanh_c.at(t, j);
                let dcj = dc[j] + dh[j] * o * (1.0 - tc * tc);
                let doj = dh[j] * tc;
                let cp = c_prev.map_or(0.0, |c| c[j]);
                da_f[j] = dcj * cp * f * (1.0 - f);
                da_i[j] = dcj * g * i * (1.0 - i);
                da_o[j] = doj * o * (1.0 - o);
                da_g[j] = dcj * i * (1.0 - g * g);
                dc[j] = dcj * f;
            }
            grads.cell.w_f.add_outer(&da_f, x_t);
            grads.cell.w_i.add_outer(&da_i, x_t);
            grads.cell.w_o.add_outer(&da_o, x_t);
            grads.cell.w_c.add_outer(&da_g, x_t);
            if let Some(hp) = h_prev {
                grads.cell.v_f.add_outer(&da_f, hp);
                grads.cell.v_i.add_outer(&da_i, hp);
                grads.cell.v_o.add_outer(&da_o, hp);
                grads.cell.v_c.add_outer(&da_g, hp);
            }
            for j in 0..m.n_cell {
                grads.cell.b_f[j] += da_f[j];
                grads.cell.b_i[j] += da_i[j];
                grads.cell.b_o[j] += da_o[j];
                grads.cell.b_c[j] += da_g[j];
            }
            dh.fill(0.0);
            params.cell.v_f.tr_matvec_add(&da_f, &mut dh);
            params.cell.v_i.tr_matvec_add(&da_i, &mut dh);
            params.cell.v_o.tr_matvec_add(&da_o, &mut dh);
            params.cell.v_c.tr_matvec_add(&da_g, &mut dh);
        }
    }

    if !loss.is_finite() {
        return Err(NnError::NonFinite {
            what: "loss",
            sample: 0,
        });
    }
    Ok(BatchGradients { grads, loss })
}

/// Loss of a batch without gradients; used by finite differencing.
pub(super) fn batch_loss(
    batch: &[TrainSample],
    params: &NetworkParams,
    cfg: &TrainConfig,
) -> Result<f64, NnError> {
    check_batch(batch, params)?;
    let m = &params.meta;
    let weight_sum: f64 = batch
        .iter()
        .map(|s| sample_weight(s, cfg.loss) * m.t_out as f64)
        .sum();
    if weight_sum <= 0.0 {
        return Err(NnError::EmptyLoss);
    }
    let mut trace = ForwardTrace::new(m.t_in, m.t_out, m.n_cell, m.n_den);
    let mut loss = 0.0;
    for (idx, sample) in batch.iter().enumerate() {
        let w = sample_weight(sample, cfg.loss);
        run_window(&sample.window, params, &mut trace);
        for tau in 0..m.t_out {
            let y = trace.outputs[tau];
            if !y.is_finite() {
                return Err(NnError::NonFinite {
                    what: "prediction",
                    sample: idx,
                });
            }
            let e = y - sample.targets[tau];
            loss += w * e * e / weight_sum;
        }
    }
    Ok(loss)
}
