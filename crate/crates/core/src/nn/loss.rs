//! Loss configuration and the weighted mean-squared error.

use super::NnError;

/// Which loss the training loop optimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum LossKind {
    /// Plain MSE; any per-sample weights are ignored (treated as 1).
    #[default]
    PlainMse,
    /// Weight-normalized MSE; samples with weight zero contribute nothing.
    WeightedMse,
}

/// `sum(w_k * (pred_k - target_k)^2) / sum(w_k)`.
///
/// Fails with [`NnError::EmptyLoss`] when every weight is zero, which
/// signals a fully filtered batch.
pub fn weighted_mse(preds: &[f64], targets: &[f64], weights: &[f64]) -> Result<f64, NnError> {
    assert_eq!(preds.len(), targets.len());
    assert_eq!(preds.len(), weights.len());
    debug_assert!(weights.iter().all(|w| *w >= 0.0));
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..preds.len() {
        let e = preds[k] - targets[k];
        num += weights[k] * e * e;
        den += weights[k];
    }
    if den <= 0.0 {
        return Err(NnError::EmptyLoss);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    #[test]
    fn uniform_weights_equal_plain_mse() {
        let preds = [1.0, 2.0, -0.5, 4.0];
        let targets = [0.5, 2.5, 0.0, 3.0];
        let w = [1.0; 4];
        let lhs = weighted_mse(&preds, &targets, &w).unwrap();
        let plain: f64 = preds
            .iter()
            .zip(&targets)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / 4.0;
        assert_eq!(lhs, plain);
    }

    #[test]
    fn zero_weight_sample_is_excluded() {
        let got = weighted_mse(&[1.0, 2.0], &[0.0, 0.0], &[0.5, 0.0]).unwrap();
        assert_eq!(got, 1.0);
    }

    #[test]
    fn all_zero_weights_is_empty_loss() {
        assert_eq!(
            weighted_mse(&[1.0], &[0.0], &[0.0]),
            Err(NnError::EmptyLoss)
        );
    }

    #[test]
    fn duplicating_equals_doubling_weight() {
        let preds = [1.5, -2.0, 0.25];
        let targets = [1.0, -1.0, 0.0];
        let w = [0.3, 0.7, 1.1];
        // duplicate sample 1
        let preds2: Vec<f64> = vec![1.5, -2.0, -2.0, 0.25];
        let targets2: Vec<f64> = vec![1.0, -1.0, -1.0, 0.0];
        let w2: Vec<f64> = vec![0.3, 0.7, 0.7, 1.1];
        let doubled = weighted_mse(&preds, &targets, &[0.3, 1.4, 1.1]).unwrap();
        let duplicated = weighted_mse(&preds2, &targets2, &w2).unwrap();
        assert!((doubled - duplicated).abs() <= 1e-15);
        let _ = w;
    }
}
