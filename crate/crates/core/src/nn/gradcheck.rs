//! Central finite-difference verification of the analytic gradients.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::backprop::{batch_loss, bptt_gradients, Gradients, TrainSample};
use super::params::NetworkParams;
use super::train::{TrainConfig, TrainableScope};
use super::NnError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Block {
    WF,
    WI,
    WO,
    WC,
    VF,
    VI,
    VO,
    VC,
    BF,
    BI,
    BO,
    BC,
    WH1,
    BH1,
    WH2,
    BH2,
}

const CELL_BLOCKS: [Block; 12] = [
    Block::WF,
    Block::WI,
    Block::WO,
    Block::WC,
    Block::VF,
    Block::VI,
    Block::VO,
    Block::VC,
    Block::BF,
    Block::BI,
    Block::BO,
    Block::BC,
];
const HEAD_BLOCKS: [Block; 4] = [Block::WH1, Block::BH1, Block::WH2, Block::BH2];

fn block_slice<'a>(params: &'a mut NetworkParams, b: Block) -> &'a mut [f64] {
    match b {
        Block::WF => params.cell.w_f.data_mut(),
        Block::WI => params.cell.w_i.data_mut(),
        Block::WO => params.cell.w_o.data_mut(),
        Block::WC => params.cell.w_c.data_mut(),
        Block::VF => params.cell.v_f.data_mut(),
        Block::VI => params.cell.v_i.data_mut(),
        Block::VO => params.cell.v_o.data_mut(),
        Block::VC => params.cell.v_c.data_mut(),
        Block::BF => &mut params.cell.b_f,
        Block::BI => &mut params.cell.b_i,
        Block::BO => &mut params.cell.b_o,
        Block::BC => &mut params.cell.b_c,
        Block::WH1 => params.head.w_h1.data_mut(),
        Block::BH1 => &mut params.head.b_h1,
        Block::WH2 => params.head.w_h2.data_mut(),
        Block::BH2 => core::slice::from_mut(&mut params.head.b_h2),
    }
}

fn grad_at(grads: &Gradients, b: Block, k: usize) -> f64 {
    match b {
        Block::WF => grads.cell.w_f.data()[k],
        Block::WI => grads.cell.w_i.data()[k],
        Block::WO => grads.cell.w_o.data()[k],
        Block::WC => grads.cell.w_c.data()[k],
        Block::VF => grads.cell.v_f.data()[k],
        Block::VI => grads.cell.v_i.data()[k],
        Block::VO => grads.cell.v_o.data()[k],
        Block::VC => grads.cell.v_c.data()[k],
        Block::BF => grads.cell.b_f[k],
        Block::BI => grads.cell.b_i[k],
        Block::BO => grads.cell.b_o[k],
        Block::BC => grads.cell.b_c[k],
        Block::WH1 => grads.head.w_h1.data()[k],
        Block::BH1 => grads.head.b_h1[k],
        Block::WH2 => grads.head.w_h2.data()[k],
        Block::BH2 => grads.head.b_h2,
    }
}

/// Compares analytic and central-difference gradients on a seeded random
/// subset of at least 50 parameters spanning every trainable block, and
/// returns the worst relative error. Cell blocks are skipped under a
/// head-only scope.
pub fn gradient_check(
    params: &NetworkParams,
    batch: &[TrainSample],
    cfg: &TrainConfig,
    eps: f64,
) -> Result<f64, NnError> {
    if !(eps > 0.0) {
        return Err(NnError::Config("eps must be positive".into()));
    }
    let analytic = bptt_gradients(batch, params, cfg)?.grads;
    let blocks: Vec<Block> = match cfg.trainable_scope {
        TrainableScope::All => CELL_BLOCKS.iter().chain(&HEAD_BLOCKS).copied().collect(),
        TrainableScope::HeadOnly => HEAD_BLOCKS.to_vec(),
    };
    let per_block = 50usize.div_ceil(blocks.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);

    let mut work = params.clone();
    let mut worst = 0.0f64;
    for b in blocks {
        let len = block_slice(&mut work, b).len();
        let probes = per_block.min(len);
        let mut chosen: Vec<usize> = Vec::with_capacity(probes);
        while chosen.len() < probes {
            let k = rng.random_range(0..len);
            if !chosen.contains(&k) {
                chosen.push(k);
            }
        }
        for k in chosen {
            let original = block_slice(&mut work, b)[k];
            block_slice(&mut work, b)[k] = original + eps;
            let plus = batch_loss(batch, &work, cfg)?;
            block_slice(&mut work, b)[k] = original - eps;
            let minus = batch_loss(batch, &work, cfg)?;
            block_slice(&mut work, b)[k] = original;
            let numeric = (plus - minus) / (2.0 * eps);
            let a = grad_at(&analytic, b, k);
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            if rel > worst {
                worst = rel;
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use crate::nn::params::{init_params, NetworkMeta};

    fn random_batch(meta: &NetworkMeta, n: usize, seed: u64) -> Vec<TrainSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| TrainSample {
                window: Mat::from_fn(meta.t_in, meta.n_in, |_, _| rng.random_range(-1.0..1.0)),
                targets: (0..meta.t_out).map(|_| rng.random_range(-1.0..1.0)).collect(),
                weight: rng.random_range(0.2..2.0),
            })
            .collect()
    }

    #[test]
    fn self_check_passes_on_small_net() {
        let meta = NetworkMeta {
            n_in: 9,
            n_cell: 8,
            n_den: 8,
            t_in: 6,
            t_out: 3,
        };
        let params = init_params(meta, 21);
        let batch = random_batch(&meta, 5, 22);
        let cfg = TrainConfig {
            loss: crate::nn::LossKind::WeightedMse,
            seed: 23,
            ..TrainConfig::default()
        };
        let err = gradient_check(&params, &batch, &cfg, 1e-5).unwrap();
        assert!(err <= 1e-4, "max relative error {err}");
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        // A gradient block scaled by 2 must fail the check decisively.
        let meta = NetworkMeta {
            n_in: 4,
            n_cell: 5,
            n_den: 4,
            t_in: 5,
            t_out: 2,
        };
        let params = init_params(meta, 31);
        let batch = random_batch(&meta, 4, 32);
        let cfg = TrainConfig {
            seed: 33,
            ..TrainConfig::default()
        };
        let grads = bptt_gradients(&batch, &params, &cfg).unwrap().grads;
        // pick the largest W_f entry so the ratio is meaningful
        let (mut best_k, mut best) = (0usize, 0.0f64);
        for (k, g) in grads.cell.w_f.data().iter().enumerate() {
            if g.abs() > best {
                best = g.abs();
                best_k = k;
            }
        }
        assert!(best > 0.0);
        let corrupted = 2.0 * grads.cell.w_f.data()[best_k];
        let mut work = params.clone();
        let eps = 1e-5;
        let original = work.cell.w_f.data()[best_k];
        work.cell.w_f.data_mut()[best_k] = original + eps;
        let plus = batch_loss(&batch, &work, &cfg).unwrap();
        work.cell.w_f.data_mut()[best_k] = original - eps;
        let minus = batch_loss(&batch, &work, &cfg).unwrap();
        let numeric = (plus - minus) / (2.0 * eps);
        let rel = (corrupted - numeric).abs() / (corrupted.abs() + numeric.abs()).max(1e-8);
        assert!(rel >= 0.3, "relative error {rel}");
    }

    #[test]
    fn head_only_skips_cell_blocks() {
        let meta = NetworkMeta {
            n_in: 3,
            n_cell: 4,
            n_den: 3,
            t_in: 4,
            t_out: 2,
        };
        let params = init_params(meta, 41);
        let batch = random_batch(&meta, 3, 42);
        let cfg = TrainConfig {
            trainable_scope: TrainableScope::HeadOnly,
            seed: 43,
            ..TrainConfig::default()
        };
        // Head gradients must still verify; the (zero) frozen cell blocks
        // are not probed at all.
        let err = gradient_check(&params, &batch, &cfg, 1e-5).unwrap();
        assert!(err <= 1e-4, "max relative error {err}");
    }
}
