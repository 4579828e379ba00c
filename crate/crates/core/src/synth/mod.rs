//! Synthetic cohorts and competition-style score residualization.
//!
//! Each subject gets a dual-channel volume (intensity, tissue label) holding
//! 123 disjoint ellipsoidal regions at fixed template cells, the exact voxel
//! count of every region as its derived covariates, sampled demographics, and
//! a raw score that is linear in the demographics plus a planted nonlinear
//! term in a few regional volumes. Residualization then removes the linear
//! demographic part by OLS, as the challenge organizers did.

mod cohort;
mod folds;
mod normalize;
mod ols;

pub use cohort::{
    generate_cohort, planted_score, tissue_class, Cohort, CohortConfig, CohortGenerator, DemographicCovariates,
    RegionTemplate, SubjectRecord, Vocabularies, CELLS, EDUCATION_LEVELS, INCOME_LEVELS, N_REGIONS, SIGNAL_REGIONS,
};
pub use folds::{split_folds, Fold};
pub use normalize::{normalize_covariates, ZScore, MIN_STD};
pub use ols::{design_matrix, fit_ols, residualize, Design, LinearModelFit, Residualized, SealedAnswer, GRAM_JITTER};
