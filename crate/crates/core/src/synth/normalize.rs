use alloc::vec::Vec;

use super::cohort::SubjectRecord;
use super::folds::Fold;
use crate::error::{invalid, Result};

/// Columns with a population standard deviation below this are only centred.
pub const MIN_STD: f64 = 1e-12;

/// Per-column affine standardization `(x - mean) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZScore {
    pub mean: Vec<f64>,
    /// Population standard deviation, or 1 for (near-)constant columns.
    pub scale: Vec<f64>,
}

impl ZScore {
    /// Fits mean and population standard deviation over `rows`.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(invalid!("cannot standardize zero rows"));
        };
        let cols = first.len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid!("ragged rows"));
        }
        let n = rows.len() as f64;
        let mut mean = alloc::vec![0.0; cols];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = alloc::vec![0.0; cols];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = libm::sqrt(s / n);
                if sd < MIN_STD {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }
}

/// Standardizes the derived covariates of every record using statistics
/// from the train fold only.
pub fn normalize_covariates(records: &[SubjectRecord]) -> Result<(ZScore, Vec<Vec<f64>>)> {
    let train: Vec<Vec<f64>> =
        records.iter().filter(|r| r.fold == Fold::Train).map(SubjectRecord::derived_f64).collect();
    if train.is_empty() {
        return Err(invalid!("normalization needs a non-empty train fold"));
    }
    let z = ZScore::fit(&train)?;
    let all = records.iter().map(|r| z.apply(&r.derived_f64())).collect();
    Ok((z, all))
}
