use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;

use super::data::{FeatureMatrix, TargetVector};
use super::penalty::line_search_rho;
use super::tree::{RegressionTree, TreeBuilder, TreeParams};
use crate::error::{config_err, invalid, Result};
use crate::rng::{self, DetRng};

/// Boosting hyperparameters. `learning_rate` is the shrinkage `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmHyperparams {
    pub learning_rate: f64,
    pub n_trees: usize,
    pub max_depth: usize,
    /// L2 weight on leaf values and stage weights.
    pub lambda: f64,
    /// L1 weight on leaf values and stage weights.
    pub alpha: f64,
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbmHyperparams {
    fn default() -> Self {
        Self { learning_rate: 0.006, n_trees: 1000, max_depth: 7, lambda: 1.05, alpha: 0.1, subsample: 0.8, seed: 0 }
    }
}

impl GbmHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(config_err!("learning_rate must be in (0, 1], got {}", self.learning_rate));
        }
        if self.max_depth == 0 {
            return Err(config_err!("max_depth must be positive"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(config_err!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(config_err!("alpha must be finite and >= 0, got {}", self.alpha));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(config_err!("subsample must be in (0, 1], got {}", self.subsample));
        }
        Ok(())
    }

    fn tree_params(&self) -> TreeParams {
        TreeParams { max_depth: self.max_depth, lambda: self.lambda, alpha: self.alpha }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub tree: RegressionTree,
    pub rho: f64,
}

/// Additive ensemble `f0 + gamma * sum_m rho_m * tree_m(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GbmModel {
    f0: f64,
    gamma: f64,
    stages: Vec<Stage>,
    hyperparams: GbmHyperparams,
    n_features: usize,
}

impl GbmModel {
    /// Assembles a model from parts, e.g. after deserialization.
    pub fn from_parts(
        f0: f64,
        gamma: f64,
        stages: Vec<Stage>,
        hyperparams: GbmHyperparams,
        n_features: usize,
    ) -> Result<Self> {
        if !f0.is_finite() {
            return Err(invalid!("f0 must be finite"));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(invalid!("gamma must be in [0, 1], got {gamma}"));
        }
        if stages.len() > hyperparams.n_trees {
            return Err(invalid!("{} stages exceed n_trees = {}", stages.len(), hyperparams.n_trees));
        }
        for (m, s) in stages.iter().enumerate() {
            if !s.rho.is_finite() {
                return Err(invalid!("stage {m} has non-finite rho"));
            }
            if s.tree.depth() > hyperparams.max_depth {
                return Err(invalid!("stage {m} tree is deeper than max_depth"));
            }
            if s.tree.max_feature().is_some_and(|f| f >= n_features) {
                return Err(invalid!("stage {m} splits on a feature beyond {n_features} columns"));
            }
        }
        Ok(Self { f0, gamma, stages, hyperparams, n_features })
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn hyperparams(&self) -> &GbmHyperparams {
        &self.hyperparams
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        self.check_cols(x)?;
        Ok((0..x.rows())
            .map(|r| {
                let row = x.row(r);
                let mut acc = self.f0;
                for s in &self.stages {
                    acc += self.gamma * s.rho * s.tree.predict_row(row);
                }
                acc
            })
            .collect())
    }

    /// Element `m` is the prediction of the first `m` stages; element 0 is
    /// the constant `f0` and the last element equals [`GbmModel::predict`].
    pub fn staged_predict(&self, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        self.check_cols(x)?;
        let mut current = vec![self.f0; x.rows()];
        let mut out = Vec::with_capacity(self.stages.len() + 1);
        out.push(current.clone());
        for s in &self.stages {
            for (r, acc) in current.iter_mut().enumerate() {
                *acc += self.gamma * s.rho * s.tree.predict_row(x.row(r));
            }
            out.push(current.clone());
        }
        Ok(out)
    }

    fn check_cols(&self, x: &FeatureMatrix) -> Result<()> {
        if x.cols() != self.n_features {
            return Err(invalid!("model expects {} features, got {}", self.n_features, x.cols()));
        }
        Ok(())
    }
}

/// Squared-loss initial estimator: the mean of `y`.
pub fn init_estimator(y: &TargetVector) -> Result<f64> {
    if y.is_empty() {
        return Err(invalid!("init_estimator on an empty target vector"));
    }
    Ok(y.as_slice().iter().sum::<f64>() / y.len() as f64)
}

/// Negative gradient of `0.5 * (y - F)^2`, i.e. `y - F`.
pub fn pseudo_residuals(y: &[f64], f: &[f64]) -> Result<Vec<f64>> {
    if y.len() != f.len() {
        return Err(invalid!("pseudo_residuals length mismatch: {} vs {}", y.len(), f.len()));
    }
    Ok(y.iter().zip(f).map(|(y, f)| y - f).collect())
}

/// `ceil(fraction * n)` distinct row indices, sorted ascending. A fraction of
/// exactly 1 returns every index without consuming randomness.
pub fn subsample_rows(n: usize, fraction: f64, rng: &mut DetRng) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(invalid!("cannot subsample zero rows"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(invalid!("subsample fraction must be in (0, 1], got {fraction}"));
    }
    if fraction == 1.0 {
        return Ok((0..n).collect());
    }
    let k = (libm::ceil(fraction * n as f64) as usize).clamp(1, n);
    let mut rows = index::sample(rng, n, k).into_vec();
    rows.sort_unstable();
    Ok(rows)
}

/// Fits a boosted ensemble. Deterministic given `hp.seed`.
pub fn fit(x: &FeatureMatrix, y: &TargetVector, hp: &GbmHyperparams) -> Result<GbmModel> {
    fit_with_stage_callback(x, y, hp, |_, _| {})
}

/// [`fit`], calling `on_stage(m, current_training_predictions)` after each
/// stage `m = 1..=n_trees` has been folded into the ensemble.
pub fn fit_with_stage_callback<F>(
    x: &FeatureMatrix,
    y: &TargetVector,
    hp: &GbmHyperparams,
    mut on_stage: F,
) -> Result<GbmModel>
where
    F: FnMut(usize, &[f64]),
{
    hp.validate()?;
    if x.rows() != y.len() {
        return Err(invalid!("{} feature rows but {} targets", x.rows(), y.len()));
    }
    let f0 = init_estimator(y)?;
    let n = x.rows();
    let targets = y.as_slice();
    let gamma = hp.learning_rate;
    let tree_params = hp.tree_params();
    let builder = TreeBuilder::new(x);
    let mut rng = rng::stream(hp.seed, rng::streams::GBM_SUBSAMPLE);

    let mut current = vec![f0; n];
    let mut stages = Vec::with_capacity(hp.n_trees);
    let mut tree_pred = vec![0.0; n];
    for m in 1..=hp.n_trees {
        let rows = subsample_rows(n, hp.subsample, &mut rng)?;
        let residual = pseudo_residuals(targets, &current)?;
        let tree = builder.fit(&residual, &rows, &tree_params)?;
        for (r, p) in tree_pred.iter_mut().enumerate() {
            *p = tree.predict_row(x.row(r));
        }
        let rho = line_search_rho(&residual, &tree_pred, hp.lambda, hp.alpha)?;
        for (acc, p) in current.iter_mut().zip(&tree_pred) {
            *acc += gamma * rho * p;
        }
        stages.push(Stage { tree, rho });
        on_stage(m, &current);
    }
    GbmModel::from_parts(f0, gamma, stages, *hp, x.cols())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbm::tree::Node;

    fn xy(rows: &[Vec<f64>], y: &[f64]) -> (FeatureMatrix, TargetVector) {
        (FeatureMatrix::from_rows(rows).unwrap(), TargetVector::new(y.to_vec()).unwrap())
    }

    #[test]
    fn init_estimator_is_mean() {
        assert_eq!(init_estimator(&TargetVector::new(vec![0.0]).unwrap()).unwrap(), 0.0);
        assert_eq!(init_estimator(&TargetVector::new(vec![1.0, 3.0]).unwrap()).unwrap(), 2.0);
        assert_eq!(init_estimator(&TargetVector::new(vec![-2.5, 0.5, 5.0]).unwrap()).unwrap(), 1.0);
        assert!(init_estimator(&TargetVector::new(vec![]).unwrap()).is_err());
    }

    #[test]
    fn residual_examples() {
        assert_eq!(pseudo_residuals(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(pseudo_residuals(&[3.0], &[1.0]).unwrap(), vec![2.0]);
        assert_eq!(pseudo_residuals(&[0.5, -1.0, 2.0], &[0.0; 3]).unwrap(), vec![0.5, -1.0, 2.0]);
        assert!(pseudo_residuals(&[1.0], &[]).is_err());
    }

    #[test]
    fn subsample_contract() {
        let mut rng = rng::stream(3, 0);
        assert_eq!(subsample_rows(5, 1.0, &mut rng).unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(subsample_rows(4, 0.25, &mut rng).unwrap().len(), 1);
        assert_eq!(subsample_rows(10, 0.31, &mut rng).unwrap().len(), 4);
        let a = subsample_rows(10, 0.5, &mut rng::stream(9, 0)).unwrap();
        let b = subsample_rows(10, 0.5, &mut rng::stream(9, 0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(subsample_rows(10, 0.0, &mut rng).is_err());
        assert!(subsample_rows(10, 1.5, &mut rng).is_err());
        assert!(subsample_rows(0, 0.5, &mut rng).is_err());
    }

    #[test]
    fn zero_trees_predict_mean() {
        let (x, y) = xy(&[vec![0.0], vec![1.0], vec![5.0]], &[1.0, 2.0, 6.0]);
        let hp = GbmHyperparams { n_trees: 0, ..Default::default() };
        let m = fit(&x, &y, &hp).unwrap();
        assert!(m.stages().is_empty());
        assert_eq!(m.predict(&x).unwrap(), vec![3.0; 3]);
        assert_eq!(m.staged_predict(&x).unwrap(), vec![vec![3.0; 3]]);
    }

    #[test]
    fn one_stump_interpolates_two_points() {
        let (x, y) = xy(&[vec![0.0], vec![1.0]], &[0.0, 1.0]);
        let hp = GbmHyperparams {
            learning_rate: 1.0,
            n_trees: 1,
            max_depth: 1,
            lambda: 0.0,
            alpha: 0.0,
            subsample: 1.0,
            seed: 0,
        };
        let m = fit(&x, &y, &hp).unwrap();
        assert_eq!(m.f0(), 0.5);
        assert_eq!(m.stages()[0].rho, 1.0);
        assert_eq!(
            m.stages()[0].tree.nodes(),
            &[
                Node::Split { feature: 0, threshold: 0.5, left: 1, right: 2 },
                Node::Leaf { value: -0.5 },
                Node::Leaf { value: 0.5 },
            ]
        );
        assert_eq!(m.predict(&x).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn update_rule_arithmetic() {
        let hp = GbmHyperparams { n_trees: 1, ..Default::default() };
        let stage = Stage { tree: RegressionTree::leaf(1.0), rho: 2.0 };
        let m = GbmModel::from_parts(0.0, 0.5, vec![stage], hp, 2).unwrap();
        let x = FeatureMatrix::from_rows(&[vec![3.0, 4.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(m.predict(&x).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn predict_checks_columns() {
        let (x, y) = xy(&[vec![0.0], vec![1.0]], &[0.0, 1.0]);
        let m = fit(&x, &y, &GbmHyperparams { n_trees: 2, ..Default::default() }).unwrap();
        let wide = FeatureMatrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert!(m.predict(&wide).is_err());
        assert!(m.staged_predict(&wide).is_err());
    }

    #[test]
    fn rejects_bad_hyperparams() {
        let (x, y) = xy(&[vec![0.0], vec![1.0]], &[0.0, 1.0]);
        for hp in [
            GbmHyperparams { learning_rate: 0.0, ..Default::default() },
            GbmHyperparams { learning_rate: 1.5, ..Default::default() },
            GbmHyperparams { max_depth: 0, ..Default::default() },
            GbmHyperparams { lambda: -1.0, ..Default::default() },
            GbmHyperparams { alpha: f64::NAN, ..Default::default() },
            GbmHyperparams { subsample: 0.0, ..Default::default() },
        ] {
            assert!(fit(&x, &y, &hp).is_err(), "{hp:?}");
        }
        let short = TargetVector::new(vec![1.0]).unwrap();
        assert!(fit(&x, &short, &GbmHyperparams::default()).is_err());
    }

    #[test]
    fn prefix_of_longer_fit_equals_shorter_fit() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![libm::sin(i as f64 * 1.3), (i % 7) as f64]).collect();
        let y: Vec<f64> = (0..40).map(|i| libm::cos(i as f64) + (i % 3) as f64).collect();
        let (x, y) = xy(&rows, &y);
        let long = GbmHyperparams { n_trees: 30, max_depth: 3, subsample: 0.7, seed: 11, ..Default::default() };
        let short = GbmHyperparams { n_trees: 12, ..long };
        let staged = fit(&x, &y, &long).unwrap().staged_predict(&x).unwrap();
        let direct = fit(&x, &y, &short).unwrap().predict(&x).unwrap();
        assert_eq!(staged[12], direct);
    }
}
