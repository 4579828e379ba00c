//! Gradient boosting machine over exact-greedy regression trees.
//!
//! Squared-error loss throughout: the initial estimator is the target mean,
//! pseudo-residuals are `y - F`, and both the leaf values and the per-stage
//! weight `rho` carry an elastic-net penalty `0.5 * lambda * w^2 + alpha * |w|`
//! with closed-form soft-thresholded minimizers. Stage `m` updates the ensemble
//! as `F_m = F_{m-1} + gamma * rho_m * tree_m(x)`.

mod boost;
mod data;
mod penalty;
mod tree;

pub use boost::{
    fit, fit_with_stage_callback, init_estimator, pseudo_residuals, subsample_rows, GbmHyperparams, GbmModel, Stage,
};
pub use data::{FeatureMatrix, TargetVector};
pub use penalty::{leaf_value, line_search_rho, soft_threshold};
pub use tree::{fit_tree, Node, RegressionTree, TreeBuilder, TreeParams};
