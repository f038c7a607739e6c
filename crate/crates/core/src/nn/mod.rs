//! Minimal sequence-learning engine: one LSTM cell layer unfolded over a
//! fixed-length window, a two-layer dense head producing one scalar per
//! tail step, hand-derived backpropagation through time, weighted losses,
//! Adam updates, and finite-difference gradient checking.
//!
//! The topology is fixed (input -> cell layer -> dense layer -> scalar);
//! there is no general computation graph.

mod backprop;
mod forward;
mod gradcheck;
mod loss;
mod optimizer;
mod params;
mod train;

pub(crate) use optimizer::adam_update;

pub use backprop::{bptt_gradients, BatchGradients, Gradients, TrainSample};
pub use forward::{forward_sequence, lstm_step};
pub use gradcheck::gradient_check;
pub use loss::{weighted_mse, LossKind};
pub use optimizer::{optimizer_step, OptState};
pub use params::{
    init_params, DenseHeadParams, LstmCellParams, NetworkMeta, NetworkParams, SequenceState,
};
pub use train::{train, FitReport, TrainConfig, TrainableScope};

use alloc::string::String;

/// Errors surfaced by the sequence engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    /// Array shapes disagree with each other or with the declared meta.
    #[error("configuration error: {0}")]
    Config(String),
    /// A non-finite value appeared where finite arithmetic was required.
    #[error("numeric error: non-finite {what} (sample {sample})")]
    NonFinite { what: &'static str, sample: usize },
    /// Every weight in the batch is zero, so the weighted loss is undefined.
    #[error("empty loss: all sample weights are zero")]
    EmptyLoss,
}
