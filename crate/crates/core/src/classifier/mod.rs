//! The two-convolution, two-dense-layer MNIST classifier: parameters,
//! forward and backward passes, SGD training and batch inference.

mod checkpoint;
mod gemm;
mod network;
mod params;
mod predict;
mod softmax;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_VERSION};
pub use network::{forward, forward_batch, loss_and_grad, Forward, IMAGE_SIDE};
pub use params::{NetworkParams, Tensor, PARAM_COUNT};
pub use predict::{accuracy, evaluate_accuracy, predict_dataset, predict_dataset_serial, predict_images};
pub use softmax::{log_softmax, logit_of_probability, softmax};
pub use train::{sgd_step, train, EpochStats, TrainConfig, TrainOutcome};
