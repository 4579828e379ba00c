use alloc::vec;
use alloc::vec::Vec;

use super::mse::evaluate_mse;
use crate::error::{config_err, Result};
use crate::exec::Executor;
use crate::gbm::{fit, FeatureMatrix, GbmHyperparams, TargetVector};

/// Candidate values per hyperparameter; the coarse grid is their product.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseGrid {
    pub learning_rate: Vec<f64>,
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
}

/// Neighbourhood of the coarse winner searched in stage two. Tree count and
/// penalties stay at the winner's values.
#[derive(Debug, Clone, PartialEq)]
pub struct FineRule {
    pub lr_factors: Vec<f64>,
    pub depth_offsets: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub coarse: CoarseGrid,
    pub fine: FineRule,
    /// Held fixed across every configuration.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            coarse: CoarseGrid {
                learning_rate: vec![0.03, 0.1],
                n_trees: vec![100, 300],
                max_depth: vec![2, 3],
                lambda: vec![0.0, 1.05],
                alpha: vec![0.0, 0.1],
            },
            fine: FineRule { lr_factors: vec![0.6, 0.8, 1.0, 1.25, 1.67], depth_offsets: vec![-1, 0, 1] },
            subsample: 0.8,
            seed: 17,
        }
    }
}

impl GridSpec {
    /// The larger grid bracketing the originally reported winner
    /// (learning rate 0.006, 1000 trees, depth 7).
    pub fn wide() -> Self {
        Self {
            coarse: CoarseGrid {
                learning_rate: vec![0.001, 0.003, 0.01, 0.03, 0.1],
                n_trees: vec![250, 500, 1000],
                max_depth: vec![3, 5, 7],
                lambda: vec![0.0, 1.05],
                alpha: vec![0.0, 0.1],
            },
            fine: FineRule { lr_factors: vec![0.6, 0.8, 1.0, 1.25, 1.67], depth_offsets: vec![-2, -1, 0, 1, 2] },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.coarse;
        if c.learning_rate.is_empty()
            || c.n_trees.is_empty()
            || c.max_depth.is_empty()
            || c.lambda.is_empty()
            || c.alpha.is_empty()
        {
            return Err(config_err!("every coarse grid list must be non-empty"));
        }
        if self.fine.lr_factors.is_empty() || self.fine.depth_offsets.is_empty() {
            return Err(config_err!("fine grid rule must be non-empty"));
        }
        if !self.fine.lr_factors.contains(&1.0) || !self.fine.depth_offsets.contains(&0) {
            return Err(config_err!("fine grid rule must contain factor 1.0 and depth offset 0"));
        }
        if self.fine.lr_factors.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(config_err!("learning-rate factors must be positive"));
        }
        for lr in &c.learning_rate {
            for trees in &c.n_trees {
                for depth in &c.max_depth {
                    for lambda in &c.lambda {
                        for alpha in &c.alpha {
                            self.config(*lr, *trees, *depth, *lambda, *alpha).validate()?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn config(&self, learning_rate: f64, n_trees: usize, max_depth: usize, lambda: f64, alpha: f64) -> GbmHyperparams {
        GbmHyperparams { learning_rate, n_trees, max_depth, lambda, alpha, subsample: self.subsample, seed: self.seed }
    }

    /// Coarse configurations, learning rate outermost and alpha innermost.
    pub fn coarse_configs(&self) -> Vec<GbmHyperparams> {
        let c = &self.coarse;
        let mut out = Vec::new();
        for &lr in &c.learning_rate {
            for &trees in &c.n_trees {
                for &depth in &c.max_depth {
                    for &lambda in &c.lambda {
                        for &alpha in &c.alpha {
                            out.push(self.config(lr, trees, depth, lambda, alpha));
                        }
                    }
                }
            }
        }
        out
    }

    /// Fine configurations around `winner`, clamped to legal ranges and
    /// de-duplicated in enumeration order. Always contains `winner`.
    pub fn fine_configs(&self, winner: &GbmHyperparams) -> Vec<GbmHyperparams> {
        let mut out: Vec<GbmHyperparams> = Vec::new();
        for &factor in &self.fine.lr_factors {
            let lr = if factor == 1.0 { winner.learning_rate } else { (winner.learning_rate * factor).min(1.0) };
            for &offset in &self.fine.depth_offsets {
                let depth = (winner.max_depth as i64 + offset).max(1) as usize;
                let hp = GbmHyperparams { learning_rate: lr, max_depth: depth, ..*winner };
                if !out.contains(&hp) {
                    out.push(hp);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRow {
    /// 1 = coarse, 2 = fine.
    pub stage: u8,
    /// Position in the stage's enumeration order.
    pub index: usize,
    pub hyperparams: GbmHyperparams,
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub best: GbmHyperparams,
    pub best_val_mse: f64,
    /// Every evaluated configuration, coarse rows first.
    pub rows: Vec<GridRow>,
}

impl GridOutcome {
    pub fn stage_winner(&self, stage: u8) -> Option<&GridRow> {
        argmin(self.rows.iter().filter(|r| r.stage == stage))
    }
}

fn argmin<'a>(rows: impl Iterator<Item = &'a GridRow>) -> Option<&'a GridRow> {
    rows.fold(None, |best: Option<&GridRow>, r| match best {
        Some(b) if b.val_mse <= r.val_mse => Some(b),
        _ => Some(r),
    })
}

/// Scores `configs` on (train, validation). Configurations that differ only
/// in `n_trees` share one fit of the largest count: boosting is
/// deterministic and a model's first `m` stages equal an `m`-tree fit.
fn evaluate_configs<E: Executor>(
    configs: &[GbmHyperparams],
    data: &SearchData<'_>,
    exec: &E,
) -> Result<Vec<(f64, f64)>> {
    let mut groups: Vec<(GbmHyperparams, Vec<usize>)> = Vec::new();
    for (i, hp) in configs.iter().enumerate() {
        let key = GbmHyperparams { n_trees: 0, ..*hp };
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(i),
            None => groups.push((key, vec![i])),
        }
    }
    let results = exec.map(groups.len(), |g| -> Result<Vec<(usize, f64, f64)>> {
        let (key, members) = &groups[g];
        let max_trees = members.iter().map(|&i| configs[i].n_trees).max().unwrap_or(0);
        let model = fit(data.train_x, data.train_y, &GbmHyperparams { n_trees: max_trees, ..*key })?;
        let train_staged = model.staged_predict(data.train_x)?;
        let val_staged = model.staged_predict(data.val_x)?;
        members
            .iter()
            .map(|&i| {
                let m = configs[i].n_trees;
                Ok((
                    i,
                    evaluate_mse(&train_staged[m], data.train_y.as_slice())?,
                    evaluate_mse(&val_staged[m], data.val_y)?,
                ))
            })
            .collect()
    });
    let mut scores = vec![(f64::NAN, f64::NAN); configs.len()];
    for group in results {
        for (i, tr, va) in group? {
            scores[i] = (tr, va);
        }
    }
    Ok(scores)
}

struct SearchData<'a> {
    train_x: &'a FeatureMatrix,
    train_y: &'a TargetVector,
    val_x: &'a FeatureMatrix,
    val_y: &'a [f64],
}

/// Coarse grid, then the fine neighbourhood of the coarse winner. Returns the
/// fine-stage configuration with the lowest validation MSE (first in
/// enumeration order on ties) and a row per evaluated configuration.
pub fn two_stage_grid_search<E: Executor>(
    train_x: &FeatureMatrix,
    train_y: &TargetVector,
    val_x: &FeatureMatrix,
    val_y: &TargetVector,
    grid: &GridSpec,
    exec: &E,
) -> Result<GridOutcome> {
    grid.validate()?;
    let data = SearchData { train_x, train_y, val_x, val_y: val_y.as_slice() };

    let coarse = grid.coarse_configs();
    let coarse_scores = evaluate_configs(&coarse, &data, exec)?;
    let mut rows: Vec<GridRow> = coarse
        .iter()
        .zip(&coarse_scores)
        .enumerate()
        .map(|(index, (hp, &(train_mse, val_mse)))| GridRow { stage: 1, index, hyperparams: *hp, train_mse, val_mse })
        .collect();
    let winner = *argmin(rows.iter()).expect("non-empty coarse grid");

    let fine = grid.fine_configs(&winner.hyperparams);
    let fresh: Vec<GbmHyperparams> = fine.iter().filter(|hp| !coarse.contains(hp)).copied().collect();
    let fresh_scores = evaluate_configs(&fresh, &data, exec)?;
    for (index, hp) in fine.iter().enumerate() {
        let (train_mse, val_mse) = match coarse.iter().position(|c| c == hp) {
            Some(i) => coarse_scores[i],
            None => fresh_scores[fresh.iter().position(|f| f == hp).expect("fresh config")],
        };
        rows.push(GridRow { stage: 2, index, hyperparams: *hp, train_mse, val_mse });
    }
    let best = *argmin(rows.iter().filter(|r| r.stage == 2)).expect("fine grid contains the coarse winner");
    Ok(GridOutcome { best: best.hyperparams, best_val_mse: best.val_mse, rows })
}
