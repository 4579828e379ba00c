//! On-disk formats for every pipeline artifact.

pub mod checkpoint;
pub mod gbm_text;
pub mod tables;
pub mod vvol;
