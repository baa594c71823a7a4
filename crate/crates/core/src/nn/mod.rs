//! Small feedforward-network engine in double precision: dense, batchnorm,
//! tanh and sigmoid layers with exact backpropagation, MSE and binary
//! cross-entropy losses, SGD/Adam, and text checkpoints.
//!
//! Batches are `n × width` matrices with one sample per row.

mod checkpoint;
mod gradcheck;
mod layer;
mod loss;
mod model;
mod optim;
mod train;

pub use checkpoint::{load_model, save_model, Checkpoint, FORMAT_VERSION};
pub use gradcheck::{gradient_check, gradient_check_with, relative_error, GradCheckReport, RELATIVE_FLOOR};
pub use layer::{validate_specs, LayerKind, LayerSpec, BATCHNORM_EPSILON, BATCHNORM_MOMENTUM};
pub use loss::{bce, data_loss, loss_and_grad, LossKind, BCE_CLAMP};
pub use model::{BatchNormState, ForwardCache, Gradients, LayerGrad, LayerParams, MlpModel, Mode};
pub use optim::{OptimizerKind, OptimizerState, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use train::{epoch_batches, holdout_split, train, TrainConfig, TrainOutcome, Trainer};

/// Convenience wrapper matching the free-function style used elsewhere.
pub fn init_model(specs: &[LayerSpec], seed: u64) -> crate::Result<MlpModel> {
    MlpModel::init(specs, seed)
}
