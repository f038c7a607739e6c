//! Forward evaluation: a single cell step, the unfolded sequence, and the
//! dense head applied at the tail steps.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::params::{DenseHeadParams, LstmCellParams, NetworkParams, SequenceState};
use super::NnError;
use crate::linalg::{dot, Mat};
use crate::numeric::{sigmoid, tanh};

/// One recurrent step. Gate order: forget, input, output; candidate through
/// tanh; new cell state `f*c + i*g`; intermediate state `o*tanh(c)`.
pub fn lstm_step(
    x: &[f64],
    state: &SequenceState,
    params: &LstmCellParams,
) -> Result<SequenceState, NnError> {
    let n_cell = params.n_cell();
    if x.len() != params.n_in() {
        return Err(NnError::Config(format!(
            "lstm_step: input length {} does not match n_in {}",
            x.len(),
            params.n_in()
        )));
    }
    if state.c.len() != n_cell || state.h.len() != n_cell {
        return Err(NnError::Config(format!(
            "lstm_step: state length {}/{} does not match n_cell {}",
            state.c.len(),
            state.h.len(),
            n_cell
        )));
    }
    if !x.iter().all(|v| v.is_finite())
        || !state.c.iter().all(|v| v.is_finite())
        || !state.h.iter().all(|v| v.is_finite())
    {
        return Err(NnError::NonFinite {
            what: "lstm_step input",
            sample: 0,
        });
    }
    let mut next = SequenceState::zeros(n_cell);
    let mut scratch = StepScratch::new(n_cell);
    step_into(x, &state.c, &state.h, params, &mut scratch, &mut next);
    Ok(next)
}

/// Per-step gate activations retained for backpropagation.
pub(super) struct StepScratch {
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub o: Vec<f64>,
    pub g: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

impl StepScratch {
    pub fn new(n_cell: usize) -> Self {
        Self {
            f: vec![0.0; n_cell],
            i: vec![0.0; n_cell],
            o: vec![0.0; n_cell],
            g: vec![0.0; n_cell],
            tanh_c: vec![0.0; n_cell],
        }
    }
}

/// Unchecked single step; shapes must already be consistent. The four gate
/// pre-activations are accumulated in one pass over the inputs so x and
/// h_prev are loaded once per cell unit.
pub(super) fn step_into(
    x: &[f64],
    c_prev: &[f64],
    h_prev: &[f64],
    p: &LstmCellParams,
    scratch: &mut StepScratch,
    out: &mut SequenceState,
) {
    let n_cell = p.n_cell();
    for j in 0..n_cell {
        let mut af = p.b_f[j];
        let mut ai = p.b_i[j];
        let mut ao = p.b_o[j];
        let mut ag = p.b_c[j];
        let (wf, wi, wo, wc) = (p.w_f.row(j), p.w_i.row(j), p.w_o.row(j), p.w_c.row(j));
        for (k, xv) in x.iter().enumerate() {
            af += wf[k] * xv;
            ai += wi[k] * xv;
            ao += wo[k] * xv;
            ag += wc[k] * xv;
        }
        let (vf, vi, vo, vc) = (p.v_f.row(j), p.v_i.row(j), p.v_o.row(j), p.v_c.row(j));
        for (k, hv) in h_prev.iter().enumerate() {
            af += vf[k] * hv;
            ai += vi[k] * hv;
            ao += vo[k] * hv;
            ag += vc[k] * hv;
        }
        let f = sigmoid(af);
        let i = sigmoid(ai);
        let o = sigmoid(ao);
        let g = tanh(ag);
        let c = f * c_prev[j] + i * g;
        let tc = tanh(c);
        scratch.f[j] = f;
        scratch.i[j] = i;
        scratch.o[j] = o;
        scratch.g[j] = g;
        scratch.tanh_c[j] = tc;
        out.c[j] = c;
        out.h[j] = o * tc;
    }
}

/// Hidden activation and scalar output of the dense head for one encoding.
pub(super) fn head_forward(head: &DenseHeadParams, h: &[f64], hidden: &mut [f64]) -> f64 {
    for (j, a) in hidden.iter_mut().enumerate() {
        let z = head.b_h1[j] + dot(head.w_h1.row(j), h);
        *a = if z > 0.0 { z } else { 0.0 };
    }
    head.b_h2 + dot(head.w_h2.row(0), hidden)
}

/// Everything the backward pass needs from one window's forward run.
pub(super) struct ForwardTrace {
    pub f: Mat,
    pub i: Mat,
    pub o: Mat,
    pub g: Mat,
    pub c: Mat,
    pub h: Mat,
    pub tanh_c: Mat,
    /// Hidden activations of the head, one row per tail step.
    pub hidden: Mat,
    pub outputs: Vec<f64>,
}

impl ForwardTrace {
    pub fn new(t_in: usize, t_out: usize, n_cell: usize, n_den: usize) -> Self {
        Self {
            f: Mat::zeros(t_in, n_cell),
            i: Mat::zeros(t_in, n_cell),
            o: Mat::zeros(t_in, n_cell),
            g: Mat::zeros(t_in, n_cell),
            c: Mat::zeros(t_in, n_cell),
            h: Mat::zeros(t_in, n_cell),
            tanh_c: Mat::zeros(t_in, n_cell),
            hidden: Mat::zeros(t_out, n_den),
            outputs: vec![0.0; t_out],
        }
    }
}

/// Runs the full window and fills `trace`; shapes are trusted.
pub(super) fn run_window(window: &Mat, params: &NetworkParams, trace: &mut ForwardTrace) {
    let meta = &params.meta;
    let mut state = SequenceState::zeros(meta.n_cell);
    let mut next = SequenceState::zeros(meta.n_cell);
    let mut scratch = StepScratch::new(meta.n_cell);
    let tail_start = meta.t_in - meta.t_out;
    for t in 0..meta.t_in {
        step_into(
            window.row(t),
            &state.c,
            &state.h,
            &params.cell,
            &mut scratch,
            &mut next,
        );
        trace.f.row_mut(t).copy_from_slice(&scratch.f);
        trace.i.row_mut(t).copy_from_slice(&scratch.i);
        trace.o.row_mut(t).copy_from_slice(&scratch.o);
        trace.g.row_mut(t).copy_from_slice(&scratch.g);
        trace.tanh_c.row_mut(t).copy_from_slice(&scratch.tanh_c);
        trace.c.row_mut(t).copy_from_slice(&next.c);
        trace.h.row_mut(t).copy_from_slice(&next.h);
        if t >= tail_start {
            let tau = t - tail_start;
            let y = head_forward(&params.head, &next.h, trace.hidden.row_mut(tau));
            trace.outputs[tau] = y;
        }
        core::mem::swap(&mut state, &mut next);
    }
}

/// Evaluates the window from a zero initial state and returns the scalar
/// output and the encoding vector for each of the last `t_out` steps.
pub fn forward_sequence(window: &Mat, params: &NetworkParams) -> Result<(Vec<f64>, Mat), NnError> {
    params.validate()?;
    let meta = &params.meta;
    if window.rows() != meta.t_in || window.cols() != meta.n_in {
        return Err(NnError::Config(format!(
            "forward_sequence: window is {}x{}, expected {}x{}",
            window.rows(),
            window.cols(),
            meta.t_in,
            meta.n_in
        )));
    }
    if !window.is_finite() {
        return Err(NnError::NonFinite {
            what: "window",
            sample: 0,
        });
    }
    let mut trace = ForwardTrace::new(meta.t_in, meta.t_out, meta.n_cell, meta.n_den);
    run_window(window, params, &mut trace);
    let tail_start = meta.t_in - meta.t_out;
    let mut encodings = Mat::zeros(meta.t_out, meta.n_cell);
    for tau in 0..meta.t_out {
        encodings
            .row_mut(tau)
            .copy_from_slice(trace.h.row(tail_start + tau));
    }
    Ok((trace.outputs, encodings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::params::{init_params, NetworkMeta};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn meta(n_in: usize, n_cell: usize, n_den: usize, t_in: usize, t_out: usize) -> NetworkMeta {
        NetworkMeta {
            n_in,
            n_cell,
            n_den,
            t_in,
            t_out,
        }
    }

    #[test]
    fn zero_params_give_zero_state() {
        // sigma(0) = 0.5 and tanh(0) = 0, so c = 0.5*0 + 0.5*0 and h = 0.
        let p = LstmCellParams::zeros(3, 2);
        let s = SequenceState::zeros(3);
        let next = lstm_step(&[0.7, -1.3], &s, &p).unwrap();
        assert_eq!(next.c, vec![0.0; 3]);
        assert_eq!(next.h, vec![0.0; 3]);
    }

    #[test]
    fn saturated_forget_gate_preserves_cell_state() {
        let mut p = LstmCellParams::zeros(2, 3);
        p.b_f = vec![20.0, 20.0];
        let s = SequenceState {
            c: vec![0.25, -1.5],
            h: vec![0.0, 0.0],
        };
        let next = lstm_step(&[0.3, -0.4, 2.0], &s, &p).unwrap();
        assert!((next.c[0] - 0.25).abs() < 1e-8);
        assert!((next.c[1] + 1.5).abs() < 1e-8);
    }

    // Independent scalar-loop transcription of the cell equations, written
    // without reusing any of the implementation helpers.
    fn scalar_reference_step(
        x: &[f64],
        c_prev: &[f64],
        h_prev: &[f64],
        p: &LstmCellParams,
    ) -> (Vec<f64>, Vec<f64>) {
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let n = p.n_cell();
        let mut c = vec![0.0; n];
        let mut h = vec![0.0; n];
        for j in 0..n {
            let mut af = p.b_f[j];
            let mut ai = p.b_i[j];
            let mut ao = p.b_o[j];
            let mut ag = p.b_c[j];
            for (k, xv) in x.iter().enumerate() {
                af += p.w_f.at(j, k) * xv;
                ai += p.w_i.at(j, k) * xv;
                ao += p.w_o.at(j, k) * xv;
                ag += p.w_c.at(j, k) * xv;
            }
            for (k, hv) in h_prev.iter().enumerate() {
                af += p.v_f.at(j, k) * hv;
                ai += p.v_i.at(j, k) * hv;
                ao += p.v_o.at(j, k) * hv;
                ag += p.v_c.at(j, k) * hv;
            }
            c[j] = sig(af) * c_prev[j] + sig(ai) * ag.tanh();
            h[j] = sig(ao) * c[j].tanh();
        }
        (c, h)
    }

    #[test]
    fn step_matches_scalar_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = init_params(meta(4, 5, 3, 1, 1), 99).cell;
        for _ in 0..20 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let s = SequenceState {
                c: (0..5).map(|_| rng.random_range(-1.0..1.0)).collect(),
                h: (0..5).map(|_| rng.random_range(-0.9..0.9)).collect(),
            };
            let got = lstm_step(&x, &s, &p).unwrap();
            let (c_ref, h_ref) = scalar_reference_step(&x, &s.c, &s.h, &p);
            for j in 0..5 {
                assert!((got.c[j] - c_ref[j]).abs() <= 1e-12);
                assert!((got.h[j] - h_ref[j]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn constant_head_ignores_window() {
        let mut params = init_params(meta(3, 4, 2, 6, 3), 1);
        params.head.w_h2.fill(0.0);
        params.head.b_h2 = 2.5;
        let window = Mat::from_fn(6, 3, |r, c| (r as f64) - (c as f64) * 0.3);
        let (outputs, _) = forward_sequence(&window, &params).unwrap();
        assert_eq!(outputs, vec![2.5, 2.5, 2.5]);
    }

    #[test]
    fn degenerate_unfold_equals_step_plus_head() {
        let params = init_params(meta(4, 6, 5, 1, 1), 3);
        let window = Mat::from_fn(1, 4, |_, c| 0.2 * c as f64 - 0.1);
        let (outputs, encodings) = forward_sequence(&window, &params).unwrap();
        let step = lstm_step(
            window.row(0),
            &SequenceState::zeros(6),
            &params.cell,
        )
        .unwrap();
        assert_eq!(encodings.row(0), step.h.as_slice());
        let mut hidden = vec![0.0; 5];
        let y = head_forward(&params.head, &step.h, &mut hidden);
        assert!((outputs[0] - y).abs() <= 1e-15);
    }

    #[test]
    fn sequence_matches_stepwise_composition() {
        // Re-execute the unfold with public lstm_step calls plus a
        // standalone dense evaluation and compare.
        let params = init_params(meta(9, 8, 6, 12, 4), 42);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let window = Mat::from_fn(12, 9, |_, _| rng.random_range(-1.0..1.0));
        let (outputs, encodings) = forward_sequence(&window, &params).unwrap();

        let mut state = SequenceState::zeros(8);
        let mut tau = 0usize;
        for t in 0..12 {
            state = lstm_step(window.row(t), &state, &params.cell).unwrap();
            if t >= 12 - 4 {
                for j in 0..8 {
                    assert!((encodings.at(tau, j) - state.h[j]).abs() <= 1e-12);
                }
                let relu = |z: f64| if z > 0.0 { z } else { 0.0 };
                let mut y = params.head.b_h2;
                for d in 0..6 {
                    let mut z = params.head.b_h1[d];
                    for j in 0..8 {
                        z += params.head.w_h1.at(d, j) * state.h[j];
                    }
                    y += params.head.w_h2.at(0, d) * relu(z);
                }
                assert!((outputs[tau] - y).abs() <= 1e-12);
                tau += 1;
            }
        }
    }

    #[test]
    fn gate_and_state_bounds_hold() {
        let params = init_params(meta(5, 7, 4, 10, 2), 17);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let window = Mat::from_fn(10, 5, |_, _| rng.random_range(-50.0..50.0));
            let (_, encodings) = forward_sequence(&window, &params).unwrap();
            for r in 0..encodings.rows() {
                for v in encodings.row(r) {
                    assert!(*v > -1.0 && *v < 1.0, "h out of (-1,1): {v}");
                }
            }
        }
    }

    #[test]
    fn shape_mismatch_is_config_error() {
        let params = init_params(meta(3, 4, 2, 6, 3), 1);
        let window = Mat::zeros(6, 4);
        assert!(matches!(
            forward_sequence(&window, &params),
            Err(NnError::Config(_))
        ));
    }
}
