//! A small fully-connected network with the same training conventions as
//! the sequence engine: weight-normalized MSE, Adam updates, per-epoch
//! shuffling without replacement, and optional frozen layers.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BaselineError;
use crate::linalg::Mat;
use crate::nn::adam_update;
use crate::numeric::sqrt;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DenseLayer {
    pub w: Mat,
    pub b: Vec<f64>,
    pub relu: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpParams {
    pub layers: Vec<DenseLayer>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpTrainConfig {
    pub batch_size: usize,
    pub max_iters: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Use per-sample weights; plain MSE otherwise.
    pub weighted: bool,
}

impl MlpParams {
    /// Hidden layers rectified, output linear; weights uniform in
    /// `[-fan_in^(-1/2), fan_in^(-1/2)]`, biases zero.
    pub fn init(dims: &[usize], seed: u64) -> Self {
        assert!(dims.len() >= 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(k, d)| {
                let (n_in, n_out) = (d[0], d[1]);
                let s = 1.0 / sqrt(n_in as f64);
                DenseLayer {
                    w: Mat::from_fn(n_out, n_in, |_, _| rng.random_range(-s..=s)),
                    b: vec![0.0; n_out],
                    relu: k + 2 < dims.len(),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn n_in(&self) -> usize {
        self.layers.first().map_or(0, |l| l.w.cols())
    }

    pub fn n_out(&self) -> usize {
        self.layers.last().map_or(0, |l| l.w.rows())
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        for layer in &self.layers {
            a = layer.apply(&a);
        }
        a
    }

    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for layer in &self.layers {
            let next = layer.apply(acts.last().expect("non-empty"));
            acts.push(next);
        }
        acts
    }
}

impl DenseLayer {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.b.clone();
        self.w.matvec_add(x, &mut z);
        if self.relu {
            for v in z.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        z
    }
}

struct MlpGrads {
    w: Vec<Mat>,
    b: Vec<Vec<f64>>,
}

impl MlpGrads {
    fn zeros(params: &MlpParams) -> Self {
        Self {
            w: params
                .layers
                .iter()
                .map(|l| Mat::zeros(l.w.rows(), l.w.cols()))
                .collect(),
            b: params.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
        }
    }
}

fn accumulate_sample(
    params: &MlpParams,
    grads: &mut MlpGrads,
    x: &[f64],
    target: &[f64],
    dy_scale: f64,
) -> f64 {
    let acts = params.activations(x);
    let y = acts.last().expect("output layer");
    let mut delta: Vec<f64> = y.iter().zip(target).map(|(p, t)| p - t).collect();
    let sq: f64 = delta.iter().map(|d| d * d).sum();
    for d in delta.iter_mut() {
        *d *= dy_scale;
    }
    for l in (0..params.layers.len()).rev() {
        let input = &acts[l];
        let output = &acts[l + 1];
        if params.layers[l].relu {
            for (d, o) in delta.iter_mut().zip(output) {
                if *o <= 0.0 {
                    *d = 0.0;
                }
            }
        }
        grads.w[l].add_outer(&delta, input);
        for (g, d) in grads.b[l].iter_mut().zip(&delta) {
            *g += *d;
        }
        if l > 0 {
            let mut prev = vec![0.0; input.len()];
            params.layers[l].w.tr_matvec_add(&delta, &mut prev);
            delta = prev;
        }
    }
    sq
}

/// Trains in place; `frozen[l]` excludes layer `l` from updates (its
/// parameters stay bit-identical). Returns the per-iteration batch loss.
pub fn mlp_train(
    params: &mut MlpParams,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    weights: &[f64],
    frozen: &[bool],
    cfg: &MlpTrainConfig,
) -> Result<Vec<f64>, BaselineError> {
    let n = inputs.len();
    if n == 0 || targets.len() != n || weights.len() != n {
        return Err(BaselineError::Config(
            "inputs, targets, and weights must be aligned and non-empty".into(),
        ));
    }
    if frozen.len() != params.layers.len() {
        return Err(BaselineError::Config(format!(
            "frozen mask has {} entries for {} layers",
            frozen.len(),
            params.layers.len()
        )));
    }
    if cfg.batch_size == 0 || cfg.max_iters == 0 || !(cfg.learning_rate > 0.0) {
        return Err(BaselineError::Config(
            "batch_size, max_iters, and learning_rate must be positive".into(),
        ));
    }
    let n_out = params.n_out() as f64;
    let weight_of = |i: usize| if cfg.weighted { weights[i] } else { 1.0 };
    if cfg.weighted && weights.iter().all(|w| *w == 0.0) {
        return Err(BaselineError::Config(
            "all sample weights are zero".into(),
        ));
    }

    let mut m = MlpGrads::zeros(params);
    let mut v = MlpGrads::zeros(params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut pos = n;
    let mut history = Vec::with_capacity(cfg.max_iters);
    for iter in 0..cfg.max_iters {
        if pos >= n {
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
            pos = 0;
        }
        let end = (pos + cfg.batch_size).min(n);
        let batch = &order[pos..end];
        pos = end;

        let wsum: f64 = batch.iter().map(|&i| weight_of(i) * n_out).sum();
        if wsum <= 0.0 {
            return Err(BaselineError::Config(
                "batch contains only zero-weight samples".into(),
            ));
        }
        let mut grads = MlpGrads::zeros(params);
        let mut loss = 0.0;
        for &i in batch {
            let w = weight_of(i);
            if w == 0.0 {
                continue;
            }
            let sq = accumulate_sample(
                params,
                &mut grads,
                &inputs[i],
                &targets[i],
                2.0 * w / wsum,
            );
            loss += w * sq / wsum;
        }
        if !loss.is_finite() {
            return Err(BaselineError::Numeric(format!(
                "diverged at iteration {iter}: non-finite loss"
            )));
        }
        let step = (iter + 1) as u64;
        for l in 0..params.layers.len() {
            if frozen[l] {
                continue;
            }
            adam_update(
                params.layers[l].w.data_mut(),
                grads.w[l].data(),
                m.w[l].data_mut(),
                v.w[l].data_mut(),
                step,
                cfg.learning_rate,
            );
            adam_update(
                &mut params.layers[l].b,
                &grads.b[l],
                &mut m.b[l],
                &mut v.b[l],
                step,
                cfg.learning_rate,
            );
        }
        history.push(loss);
    }
    Ok(history)
}
