//! Reference estimators: local linear regression with a temporal kernel,
//! a Kalman filter over random-walk sensitivity coefficients, and a
//! two-stage fully-connected network sharing the secant generator and
//! reliability filter of the main pipeline.

mod kfa;
mod llr;
mod mlp;
mod snn2;

pub use kfa::{clock_means, kfa_estimate, ClockMeans, KfaConfig};
pub use llr::{llr_estimate, LlrConfig, LlrOutput};
pub use mlp::{DenseLayer, MlpParams, MlpTrainConfig};
pub use snn2::{snn2_estimate, snn2_fit, Snn2Bundle, Snn2Config};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BaselineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
    #[error(transparent)]
    Estimator(#[from] crate::estimator::EstimatorError),
}
