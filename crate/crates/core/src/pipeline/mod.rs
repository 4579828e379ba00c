//! Experiment protocol: MSE scoring, two-stage hyperparameter search and the
//! end-to-end CNN+GBM and derived-covariate+GBM runs.

mod experiment;
mod grid;
mod mse;

pub use experiment::{
    encoder_examples, extract_features_all, feature_rows, fit_gbm_arm, normalize_inputs, residual_targets,
    run_ablation, run_cnn_gbm, score_against, AblationRow, AblationRun, ArmResult, CnnGbmRun, EncoderStage,
    ExperimentReport, FoldPredictions, FoldSplit, InputNorm, CNN_METHOD, DERIVED_METHOD, LABEL_SCALE,
};
pub use grid::{two_stage_grid_search, CoarseGrid, FineRule, GridOutcome, GridRow, GridSpec};
pub use mse::evaluate_mse;
