//! Parameter containers for the LSTM cell and dense head, shape metadata,
//! and seeded initialization.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::NnError;
use crate::linalg::Mat;
use crate::numeric::sqrt;

/// Gate weight matrices and biases of a single LSTM cell layer.
///
/// Input weights are `n_cell x n_in`, recurrent weights `n_cell x n_cell`,
/// biases `n_cell`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LstmCellParams {
    #[cfg_attr(feature = "serde", serde(rename = "W_f"))]
    pub w_f: Mat,
    #[cfg_attr(feature = "serde", serde(rename = "W_i"))]
    pub w_i: Mat,
    #[cfg_attr(feature = "serde", serde(rename = "W_o"))]
    pub w_o: Mat,
    #[cfg_attr(feature = "serde", serde(rename = "W_c"))]
    pub w_c: Mat,
    #[cfg_attr(feature = "serde", serde(rename = "V_f"))]
    pub v_f: Mat,
    #[cfg_attr(feature = "serde", serde(rename = "V_i"))]
    pub v_i: Mat,
    #[cfg_attr(feature = "serde", serde(rename = "V_o"))]
    pub v_o: Mat,
    #[cfg_attr(feature = "serde", serde(rename = "V_c"))]
    pub v_c: Mat,
    pub b_f: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_o: Vec<f64>,
    pub b_c: Vec<f64>,
}

impl LstmCellParams {
    pub fn zeros(n_cell: usize, n_in: usize) -> Self {
        Self {
            w_f: Mat::zeros(n_cell, n_in),
            w_i: Mat::zeros(n_cell, n_in),
            w_o: Mat::zeros(n_cell, n_in),
            w_c: Mat::zeros(n_cell, n_in),
            v_f: Mat::zeros(n_cell, n_cell),
            v_i: Mat::zeros(n_cell, n_cell),
            v_o: Mat::zeros(n_cell, n_cell),
            v_c: Mat::zeros(n_cell, n_cell),
            b_f: vec![0.0; n_cell],
            b_i: vec![0.0; n_cell],
            b_o: vec![0.0; n_cell],
            b_c: vec![0.0; n_cell],
        }
    }

    pub fn n_cell(&self) -> usize {
        self.w_f.rows()
    }

    pub fn n_in(&self) -> usize {
        self.w_f.cols()
    }
}

/// Dense head: hidden layer with rectified activation, then a scalar output.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DenseHeadParams {
    #[cfg_attr(feature = "serde", serde(rename = "W_h1"))]
    pub w_h1: Mat,
    pub b_h1: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(rename = "W_h2"))]
    pub w_h2: Mat,
    pub b_h2: f64,
}

impl DenseHeadParams {
    pub fn zeros(n_den: usize, n_cell: usize) -> Self {
        Self {
            w_h1: Mat::zeros(n_den, n_cell),
            b_h1: vec![0.0; n_den],
            w_h2: Mat::zeros(1, n_den),
            b_h2: 0.0,
        }
    }

    pub fn n_den(&self) -> usize {
        self.w_h1.rows()
    }
}

/// Shape hyper-parameters; `t_out` tail steps of a `t_in`-step window are
/// mapped to scalar outputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkMeta {
    pub n_in: usize,
    pub n_cell: usize,
    pub n_den: usize,
    pub t_in: usize,
    pub t_out: usize,
}

/// Full parameter set of one network.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkParams {
    pub meta: NetworkMeta,
    pub cell: LstmCellParams,
    pub head: DenseHeadParams,
}

/// Cell state (long-term memory) and intermediate state (short-term memory,
/// also the encoding vector) after a step.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceState {
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

impl SequenceState {
    pub fn zeros(n_cell: usize) -> Self {
        Self {
            c: vec![0.0; n_cell],
            h: vec![0.0; n_cell],
        }
    }
}

impl NetworkParams {
    /// Checks that every array matches the declared meta and is finite.
    /// The error names the first offending field.
    pub fn validate(&self) -> Result<(), NnError> {
        let m = &self.meta;
        if m.n_in == 0 || m.n_cell == 0 || m.n_den == 0 || m.t_in == 0 || m.t_out == 0 {
            return Err(NnError::Config(String::from(
                "meta: all dimensions must be at least 1",
            )));
        }
        if m.t_out > m.t_in {
            return Err(NnError::Config(format!(
                "meta: t_out ({}) must not exceed t_in ({})",
                m.t_out, m.t_in
            )));
        }
        let check_mat = |name: &str, mat: &Mat, rows: usize, cols: usize| -> Result<(), NnError> {
            if mat.rows() != rows || mat.cols() != cols {
                return Err(NnError::Config(format!(
                    "{name}: expected {rows}x{cols}, found {}x{}",
                    mat.rows(),
                    mat.cols()
                )));
            }
            if !mat.is_finite() {
                return Err(NnError::Config(format!("{name}: non-finite entries")));
            }
            Ok(())
        };
        let check_vec = |name: &str, v: &Vec<f64>, len: usize| -> Result<(), NnError> {
            if v.len() != len {
                return Err(NnError::Config(format!(
                    "{name}: expected length {len}, found {}",
                    v.len()
                )));
            }
            if !v.iter().all(|x| x.is_finite()) {
                return Err(NnError::Config(format!("{name}: non-finite entries")));
            }
            Ok(())
        };
        check_mat("W_f", &self.cell.w_f, m.n_cell, m.n_in)?;
        check_mat("W_i", &self.cell.w_i, m.n_cell, m.n_in)?;
        check_mat("W_o", &self.cell.w_o, m.n_cell, m.n_in)?;
        check_mat("W_c", &self.cell.w_c, m.n_cell, m.n_in)?;
        check_mat("V_f", &self.cell.v_f, m.n_cell, m.n_cell)?;
        check_mat("V_i", &self.cell.v_i, m.n_cell, m.n_cell)?;
        check_mat("V_o", &self.cell.v_o, m.n_cell, m.n_cell)?;
        check_mat("V_c", &self.cell.v_c, m.n_cell, m.n_cell)?;
        check_vec("b_f", &self.cell.b_f, m.n_cell)?;
        check_vec("b_i", &self.cell.b_i, m.n_cell)?;
        check_vec("b_o", &self.cell.b_o, m.n_cell)?;
        check_vec("b_c", &self.cell.b_c, m.n_cell)?;
        check_mat("W_h1", &self.head.w_h1, m.n_den, m.n_cell)?;
        check_vec("b_h1", &self.head.b_h1, m.n_den)?;
        check_mat("W_h2", &self.head.w_h2, 1, m.n_den)?;
        if !self.head.b_h2.is_finite() {
            return Err(NnError::Config(String::from("b_h2: non-finite")));
        }
        Ok(())
    }
}

/// Seeded initialization: weights uniform in [-s, s] with s = fan_in^(-1/2),
/// biases zero except the forget-gate bias at 1.0 to keep early gradients
/// alive.
pub fn init_params(meta: NetworkMeta, seed: u64) -> NetworkParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform_mat = |rows: usize, cols: usize| -> Mat {
        let s = 1.0 / sqrt(cols as f64);
        Mat::from_fn(rows, cols, |_, _| rng.random_range(-s..=s))
    };
    let cell = LstmCellParams {
        w_f: uniform_mat(meta.n_cell, meta.n_in),
        w_i: uniform_mat(meta.n_cell, meta.n_in),
        w_o: uniform_mat(meta.n_cell, meta.n_in),
        w_c: uniform_mat(meta.n_cell, meta.n_in),
        v_f: uniform_mat(meta.n_cell, meta.n_cell),
        v_i: uniform_mat(meta.n_cell, meta.n_cell),
        v_o: uniform_mat(meta.n_cell, meta.n_cell),
        v_c: uniform_mat(meta.n_cell, meta.n_cell),
        b_f: vec![1.0; meta.n_cell],
        b_i: vec![0.0; meta.n_cell],
        b_o: vec![0.0; meta.n_cell],
        b_c: vec![0.0; meta.n_cell],
    };
    let head = DenseHeadParams {
        w_h1: uniform_mat(meta.n_den, meta.n_cell),
        b_h1: vec![0.0; meta.n_den],
        w_h2: uniform_mat(1, meta.n_den),
        b_h2: 0.0,
    };
    NetworkParams { meta, cell, head }
}
