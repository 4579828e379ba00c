//! Two-stage volumetric regression: a dual-channel 3D fully-convolutional
//! encoder that compresses voxel volumes into feature maps, and an
//! elastic-net-regularized gradient boosting machine over exact-greedy
//! regression trees that regresses a residualized score from those features.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem (volume containers, checkpoints, CSV, the CLI) lives in the
//! `voxboost` companion crate.
//!
//! Modules:
//!
//! * [`gbm`]: first-order boosting with shrinkage, row subsampling and
//!   elastic-net penalties on leaf values and stage weights.
//! * [`encoder`]: 3D convolution, max-pooling, ReLU, SGD with momentum and
//!   feature extraction at the 6³ and 3³ scales.
//! * [`synth`]: synthetic cohorts, fold assignment, OLS residualization and
//!   covariate normalization.
//! * [`pipeline`]: MSE scoring, two-stage grid search and the experiment
//!   drivers (CNN+GBM and the derived-covariate ablation).

#![no_std]

extern crate alloc;

pub mod encoder;
pub mod error;
pub mod exec;
pub mod gbm;
pub mod pipeline;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
