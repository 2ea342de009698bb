//! Compact CNN classifier trained from scratch with SGD and early stopping.
//!
//! Choices the training recipe leaves open: classic (heavy-ball) momentum, He
//! initialization, batch-norm running statistics used in eval mode, no conv
//! bias (batch norm follows every conv), early stopping on validation accuracy.

mod config;
mod net;
mod tensor;
mod train;
mod weights;

pub use config::{BlockConfig, CompactCnnConfig};
pub use net::{softmax, Cnn, ForwardMode, GradStore};
pub use tensor::Tensor;
pub use train::{
    argmax_lowest, loss_and_grad, predict, predict_batch, sgd_step, train, EarlyStopping, EpochRecord,
    EpochSource, Example, ExampleSet, FnSource, Momentum, Prediction, StopDecision, TrainConfig, TrainOutcome,
};
pub use weights::{ModelWeights, WeightEntry, WEIGHTS_MAGIC, WEIGHTS_VERSION};
