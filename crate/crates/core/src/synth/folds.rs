use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::cohort::CohortConfig;
use crate::error::{config_err, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fold {
    Train,
    Validation,
    Test,
    /// Removed by residualization because a covariate was missing.
    Excluded,
}

impl Fold {
    pub fn as_str(self) -> &'static str {
        match self {
            Fold::Train => "train",
            Fold::Validation => "validation",
            Fold::Test => "test",
            Fold::Excluded => "excluded",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "train" => Fold::Train,
            "validation" => Fold::Validation,
            "test" => Fold::Test,
            "excluded" => Fold::Excluded,
            _ => return None,
        })
    }
}

impl core::fmt::Display for Fold {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Seeded random assignment of exactly `n_train / n_val / n_test` subjects.
pub fn split_folds(n_subjects: usize, cfg: &CohortConfig) -> Result<Vec<Fold>> {
    if n_subjects != cfg.n_subjects() {
        return Err(config_err!(
            "fold counts {}+{}+{} do not sum to {n_subjects} subjects",
            cfg.n_train,
            cfg.n_val,
            cfg.n_test
        ));
    }
    let mut folds = Vec::with_capacity(n_subjects);
    folds.resize(cfg.n_train, Fold::Train);
    folds.resize(cfg.n_train + cfg.n_val, Fold::Validation);
    folds.resize(n_subjects, Fold::Test);
    folds.shuffle(&mut rng::stream(cfg.seed, rng::streams::FOLDS));
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_sizes_and_determinism() {
        let cfg = CohortConfig::default();
        let a = split_folds(340, &cfg).unwrap();
        let count = |f| a.iter().filter(|&&x| x == f).count();
        assert_eq!((count(Fold::Train), count(Fold::Validation), count(Fold::Test)), (200, 40, 100));
        assert_eq!(a, split_folds(340, &cfg).unwrap());
        let other = split_folds(340, &CohortConfig { seed: 18, ..cfg.clone() }).unwrap();
        assert_ne!(a, other);
        assert!(split_folds(339, &cfg).is_err());
    }

    #[test]
    fn names_round_trip() {
        for f in [Fold::Train, Fold::Validation, Fold::Test, Fold::Excluded] {
            assert_eq!(Fold::parse(f.as_str()), Some(f));
        }
        assert_eq!(Fold::parse("val"), None);
    }
}
