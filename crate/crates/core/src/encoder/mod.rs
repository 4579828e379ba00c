//! Dual-channel 3D fully-convolutional encoder.
//!
//! Blocks of `conv3 -> ReLU -> conv3 -> ReLU -> maxpool 2` halve the spatial
//! edge until it reaches 6; a head convolution whose kernel spans the whole
//! 6³ map then emits one value per regression target. There are no dense or
//! normalization layers. Training regresses the 123 derived covariates with
//! multi-output MSE and classical momentum SGD; the trained blocks are then
//! used as a feature extractor at the 6³ (or pooled 3³) scale.

mod conv;
mod loss;
mod model;
mod pool;
mod relu;
mod sgd;
mod tensor;
mod train;

pub use conv::{conv3d_backward, conv3d_forward, Conv3dGrads, Conv3dLayer, Padding};
pub use loss::mse_multi_loss;
pub use model::{EncoderConfig, EncoderModel, FeatureScale, ForwardCache, ModelGrads, HEAD_OUTPUTS};
pub use pool::{maxpool3d_backward, maxpool3d_forward, PoolIndices};
pub use relu::{relu_backward, relu_forward};
pub use sgd::{sgd_momentum_step, SgdMomentumConfig};
pub use tensor::VolumeTensor;
pub use train::{evaluate, train, EpochLog, Example, TrainOutcome};
