//! Adam updates over the typed parameter blocks.

use super::backprop::Gradients;
use super::params::NetworkParams;
use super::train::{TrainConfig, TrainableScope};
use crate::numeric::{powf, sqrt};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// First/second moment estimates plus the step counter.
#[derive(Clone, Debug)]
pub struct OptState {
    m: Gradients,
    v: Gradients,
    step: u64,
}

impl OptState {
    pub fn new(params: &NetworkParams) -> Self {
        Self {
            m: Gradients::zeros(params),
            v: Gradients::zeros(params),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// Elementwise Adam with bias correction. Shared by every trainable block
/// (and by the dense baselines).
pub(crate) fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    step: u64,
    lr: f64,
) {
    debug_assert_eq!(params.len(), grads.len());
    let bc1 = 1.0 - powf(BETA1, step as f64);
    let bc2 = 1.0 - powf(BETA2, step as f64);
    for k in 0..params.len() {
        let g = grads[k];
        m[k] = BETA1 * m[k] + (1.0 - BETA1) * g;
        v[k] = BETA2 * v[k] + (1.0 - BETA2) * g * g;
        let mh = m[k] / bc1;
        let vh = v[k] / bc2;
        params[k] -= lr * mh / (sqrt(vh) + EPS);
    }
}

/// Applies one Adam step to the trainable parameters. Frozen blocks (the
/// cell, when the scope is head-only) are left bit-identical.
pub fn optimizer_step(
    params: &mut NetworkParams,
    grads: &Gradients,
    state: &mut OptState,
    cfg: &TrainConfig,
) {
    state.step += 1;
    let t = state.step;
    let lr = cfg.learning_rate;
    if cfg.trainable_scope == TrainableScope::All {
        let pairs = [
            (
                params.cell.w_f.data_mut(),
                grads.cell.w_f.data(),
                state.m.cell.w_f.data_mut(),
                state.v.cell.w_f.data_mut(),
            ),
            (
                params.cell.w_i.data_mut(),
                grads.cell.w_i.data(),
                state.m.cell.w_i.data_mut(),
                state.v.cell.w_i.data_mut(),
            ),
            (
                params.cell.w_o.data_mut(),
                grads.cell.w_o.data(),
                state.m.cell.w_o.data_mut(),
                state.v.cell.w_o.data_mut(),
            ),
            (
                params.cell.w_c.data_mut(),
                grads.cell.w_c.data(),
                state.m.cell.w_c.data_mut(),
                state.v.cell.w_c.data_mut(),
            ),
            (
                params.cell.v_f.data_mut(),
                grads.cell.v_f.data(),
                state.m.cell.v_f.data_mut(),
                state.v.cell.v_f.data_mut(),
            ),
            (
                params.cell.v_i.data_mut(),
                grads.cell.v_i.data(),
                state.m.cell.v_i.data_mut(),
                state.v.cell.v_i.data_mut(),
            ),
            (
                params.cell.v_o.data_mut(),
                grads.cell.v_o.data(),
                state.m.cell.v_o.data_mut(),
                state.v.cell.v_o.data_mut(),
            ),
            (
                params.cell.v_c.data_mut(),
                grads.cell.v_c.data(),
                state.m.cell.v_c.data_mut(),
                state.v.cell.v_c.data_mut(),
            ),
        ];
        for (p, g, m, v) in pairs {
            adam_update(p, g, m, v, t, lr);
        }
        adam_update(
            &mut params.cell.b_f,
            &grads.cell.b_f,
            &mut state.m.cell.b_f,
            &mut state.v.cell.b_f,
            t,
            lr,
        );
        adam_update(
            &mut params.cell.b_i,
            &grads.cell.b_i,
            &mut state.m.cell.b_i,
            &mut state.v.cell.b_i,
            t,
            lr,
        );
        adam_update(
            &mut params.cell.b_o,
            &grads.cell.b_o,
            &mut state.m.cell.b_o,
            &mut state.v.cell.b_o,
            t,
            lr,
        );
        adam_update(
            &mut params.cell.b_c,
            &grads.cell.b_c,
            &mut state.m.cell.b_c,
            &mut state.v.cell.b_c,
            t,
            lr,
        );
    }
    adam_update(
        params.head.w_h1.data_mut(),
        grads.head.w_h1.data(),
        state.m.head.w_h1.data_mut(),
        state.v.head.w_h1.data_mut(),
        t,
        lr,
    );
    adam_update(
        &mut params.head.b_h1,
        &grads.head.b_h1,
        &mut state.m.head.b_h1,
        &mut state.v.head.b_h1,
        t,
        lr,
    );
    adam_update(
        params.head.w_h2.data_mut(),
        grads.head.w_h2.data(),
        state.m.head.w_h2.data_mut(),
        state.v.head.w_h2.data_mut(),
        t,
        lr,
    );
    let mut b2 = [params.head.b_h2];
    let g2 = [grads.head.b_h2];
    let mut m2 = [state.m.head.b_h2];
    let mut v2 = [state.v.head.b_h2];
    adam_update(&mut b2, &g2, &mut m2, &mut v2, t, lr);
    params.head.b_h2 = b2[0];
    state.m.head.b_h2 = m2[0];
    state.v.head.b_h2 = v2[0];
}
