use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use super::grid::{two_stage_grid_search, GridOutcome, GridSpec};
use super::mse::evaluate_mse;
use crate::encoder::{
    self, EncoderConfig, EncoderModel, EpochLog, Example, FeatureScale, SgdMomentumConfig, VolumeTensor,
};
use crate::error::{invalid, Result};
use crate::exec::Executor;
use crate::gbm::{fit, FeatureMatrix, GbmHyperparams, GbmModel, TargetVector};
use crate::synth::{normalize_covariates, Fold, SealedAnswer, SubjectRecord, ZScore, MIN_STD};

/// Label values are divided by this to land in [0, 1].
pub const LABEL_SCALE: f64 = 3.0;

/// Encoder input normalization: the intensity channel is z-scored with
/// train-fold statistics, the label channel is divided by [`LABEL_SCALE`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputNorm {
    pub intensity_mean: f64,
    pub intensity_std: f64,
}

impl InputNorm {
    pub fn apply(&self, v: &VolumeTensor) -> Result<VolumeTensor> {
        if v.channels() != 2 {
            return Err(invalid!("expected a 2-channel volume, got {} channels", v.channels()));
        }
        let n = v.voxels();
        let mut data = v.data().to_vec();
        let (intensity, labels) = data.split_at_mut(n);
        for x in intensity {
            *x = (*x - self.intensity_mean) / self.intensity_std;
        }
        for x in labels {
            *x /= LABEL_SCALE;
        }
        VolumeTensor::new(v.dims(), data)
    }
}

/// Fits [`InputNorm`] over the intensity channel of train-fold volumes
/// (population standard deviation).
pub fn normalize_inputs(records: &[SubjectRecord], volumes: &[VolumeTensor]) -> Result<InputNorm> {
    check_aligned(records, volumes.len())?;
    let (mut n, mut sum) = (0usize, 0.0);
    for (r, v) in records.iter().zip(volumes) {
        if r.fold == Fold::Train {
            let ch = v.channel(0);
            n += ch.len();
            sum += ch.iter().sum::<f64>();
        }
    }
    if n == 0 {
        return Err(invalid!("input normalization needs a non-empty train fold"));
    }
    let mean = sum / n as f64;
    let mut ss = 0.0;
    for (r, v) in records.iter().zip(volumes) {
        if r.fold == Fold::Train {
            ss += v.channel(0).iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
        }
    }
    let sd = libm::sqrt(ss / n as f64);
    Ok(InputNorm { intensity_mean: mean, intensity_std: if sd < MIN_STD { 1.0 } else { sd } })
}

fn check_aligned(records: &[SubjectRecord], n: usize) -> Result<()> {
    if records.len() != n {
        return Err(invalid!("{} records but {n} volumes or feature rows", records.len()));
    }
    Ok(())
}

/// Record indices per fold, in record order. Excluded subjects appear nowhere.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FoldSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl FoldSplit {
    pub fn of(records: &[SubjectRecord]) -> Self {
        let mut s = Self::default();
        for (i, r) in records.iter().enumerate() {
            match r.fold {
                Fold::Train => s.train.push(i),
                Fold::Validation => s.validation.push(i),
                Fold::Test => s.test.push(i),
                Fold::Excluded => {}
            }
        }
        s
    }
}

/// Encoder training pairs: train and test folds form the training set, the
/// validation fold the selection set. Targets are the derived covariates
/// z-scored with train-fold statistics.
pub fn encoder_examples(
    records: &[SubjectRecord],
    volumes: &[VolumeTensor],
    norm: &InputNorm,
) -> Result<(ZScore, Vec<Example>, Vec<Example>)> {
    check_aligned(records, volumes.len())?;
    let (targets_norm, targets) = normalize_covariates(records)?;
    let split = FoldSplit::of(records);
    let mut fit_idx: Vec<usize> = split.train.iter().chain(&split.test).copied().collect();
    fit_idx.sort_unstable();
    let make = |idx: &[usize]| -> Result<Vec<Example>> {
        idx.iter().map(|&i| Ok(Example { input: norm.apply(&volumes[i])?, target: targets[i].clone() })).collect()
    };
    Ok((targets_norm, make(&fit_idx)?, make(&split.validation)?))
}

/// A trained encoder plus what is needed to reapply it.
#[derive(Debug, Clone)]
pub struct EncoderStage {
    pub model: EncoderModel,
    pub input_norm: InputNorm,
    pub target_norm: ZScore,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

impl EncoderStage {
    pub fn fit<E: Executor>(
        records: &[SubjectRecord],
        volumes: &[VolumeTensor],
        cfg: &EncoderConfig,
        sgd: &SgdMomentumConfig,
        exec: &E,
    ) -> Result<Self> {
        let input_norm = normalize_inputs(records, volumes)?;
        let (target_norm, train_set, val_set) = encoder_examples(records, volumes, &input_norm)?;
        let model = EncoderModel::new(cfg.clone(), sgd.seed)?;
        let out = encoder::train(model, &train_set, &val_set, sgd, exec)?;
        Ok(Self { model: out.model, input_norm, target_norm, best_epoch: out.best_epoch, log: out.log })
    }
}

/// Feature vector of every volume, in input order.
pub fn extract_features_all<E: Executor>(
    model: &EncoderModel,
    norm: &InputNorm,
    volumes: &[VolumeTensor],
    scale: FeatureScale,
    exec: &E,
) -> Result<Vec<Vec<f64>>> {
    model.config().feature_len(scale)?;
    exec.map(volumes.len(), |i| model.extract_features(&norm.apply(&volumes[i])?, scale)).into_iter().collect()
}

/// `(subject_id, prediction)` pairs per fold, in record order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FoldPredictions {
    pub train: Vec<(String, f64)>,
    pub validation: Vec<(String, f64)>,
    pub test: Vec<(String, f64)>,
}

impl FoldPredictions {
    pub fn fold(&self, fold: Fold) -> Option<&[(String, f64)]> {
        match fold {
            Fold::Train => Some(&self.train),
            Fold::Validation => Some(&self.validation),
            Fold::Test => Some(&self.test),
            Fold::Excluded => None,
        }
    }
}

/// One GBM arm: grid search on (train, validation), winner refit on train,
/// predictions for every fold.
#[derive(Debug, Clone)]
pub struct ArmResult {
    pub method: String,
    pub grid: GridOutcome,
    pub model: GbmModel,
    pub predictions: FoldPredictions,
    pub train_mse: f64,
    pub val_mse: f64,
}

/// Residual scores of the records at `idx`; errors if any is missing.
pub fn residual_targets(records: &[SubjectRecord], idx: &[usize]) -> Result<TargetVector> {
    let y = idx
        .iter()
        .map(|&i| {
            records[i].residual_score.ok_or_else(|| invalid!("subject {} has no residual score", records[i].subject_id))
        })
        .collect::<Result<Vec<f64>>>()?;
    TargetVector::new(y)
}

/// Feature rows at `idx` as a matrix.
pub fn feature_rows(features: &[Vec<f64>], idx: &[usize]) -> Result<FeatureMatrix> {
    let rows: Vec<Vec<f64>> = idx.iter().map(|&i| features[i].clone()).collect();
    FeatureMatrix::from_rows(&rows)
}

/// Runs the grid protocol on `features` (one row per record) against the
/// residual scores. Test-fold rows are only predicted; their scores are
/// never read.
pub fn fit_gbm_arm<E: Executor>(
    method: &str,
    features: &[Vec<f64>],
    records: &[SubjectRecord],
    grid: &GridSpec,
    exec: &E,
) -> Result<ArmResult> {
    check_aligned(records, features.len())?;
    let split = FoldSplit::of(records);
    if split.train.is_empty() || split.validation.is_empty() {
        return Err(invalid!("grid search needs non-empty train and validation folds"));
    }
    let (tx, vx) = (feature_rows(features, &split.train)?, feature_rows(features, &split.validation)?);
    let (ty, vy) = (residual_targets(records, &split.train)?, residual_targets(records, &split.validation)?);
    let outcome = two_stage_grid_search(&tx, &ty, &vx, &vy, grid, exec)?;
    let model = fit(&tx, &ty, &outcome.best)?;

    let predict = |idx: &[usize]| -> Result<Vec<(String, f64)>> {
        if idx.is_empty() {
            return Ok(Vec::new());
        }
        let p = model.predict(&feature_rows(features, idx)?)?;
        Ok(idx.iter().map(|&i| records[i].subject_id.clone()).zip(p).collect())
    };
    let predictions = FoldPredictions {
        train: predict(&split.train)?,
        validation: predict(&split.validation)?,
        test: predict(&split.test)?,
    };
    let values = |p: &[(String, f64)]| p.iter().map(|(_, v)| *v).collect::<Vec<f64>>();
    let train_mse = evaluate_mse(&values(&predictions.train), ty.as_slice())?;
    let val_mse = evaluate_mse(&values(&predictions.validation), vy.as_slice())?;
    Ok(ArmResult { method: method.into(), grid: outcome, model, predictions, train_mse, val_mse })
}

/// MSE of `predictions` against sealed answers, matched by subject id and
/// accumulated in prediction order. Every answer must be predicted exactly once.
pub fn score_against(predictions: &[(String, f64)], answers: &[SealedAnswer]) -> Result<f64> {
    if predictions.len() != answers.len() {
        return Err(invalid!("{} predictions for {} answers", predictions.len(), answers.len()));
    }
    let mut sorted: Vec<(&str, f64)> = answers.iter().map(|a| (a.subject_id.as_str(), a.residual_score)).collect();
    sorted.sort_unstable_by(|a, b| a.0.cmp(b.0));
    if let Some(w) = sorted.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(invalid!("duplicate answer for subject {}", w[0].0));
    }
    let mut seen = alloc::vec![false; sorted.len()];
    let mut truth = Vec::with_capacity(predictions.len());
    for (id, _) in predictions {
        let k =
            sorted.binary_search_by(|a| a.0.cmp(id.as_str())).map_err(|_| invalid!("no answer for subject {id}"))?;
        if core::mem::replace(&mut seen[k], true) {
            return Err(invalid!("subject {id} predicted twice"));
        }
        truth.push(sorted[k].1);
    }
    let p: Vec<f64> = predictions.iter().map(|(_, v)| *v).collect();
    evaluate_mse(&p, &truth)
}

/// Encoder, extracted features and the GBM arm on top of them.
#[derive(Debug, Clone)]
pub struct CnnGbmRun {
    pub encoder: EncoderStage,
    pub scale: FeatureScale,
    /// One row per record.
    pub features: Vec<Vec<f64>>,
    pub arm: ArmResult,
}

pub const CNN_METHOD: &str = "CNN+GBM";
pub const DERIVED_METHOD: &str = "Derived+GBM";

#[allow(clippy::too_many_arguments)]
pub fn run_cnn_gbm<E: Executor>(
    records: &[SubjectRecord],
    volumes: &[VolumeTensor],
    encoder_cfg: &EncoderConfig,
    sgd: &SgdMomentumConfig,
    scale: FeatureScale,
    grid: &GridSpec,
    exec: &E,
) -> Result<CnnGbmRun> {
    let encoder = EncoderStage::fit(records, volumes, encoder_cfg, sgd, exec)?;
    let features = extract_features_all(&encoder.model, &encoder.input_norm, volumes, scale, exec)?;
    let arm = fit_gbm_arm(CNN_METHOD, &features, records, grid, exec)?;
    Ok(CnnGbmRun { encoder, scale, features, arm })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub method: String,
    pub train_mse: f64,
    pub val_mse: f64,
}

impl AblationRow {
    fn of(arm: &ArmResult) -> Self {
        Self { method: arm.method.clone(), train_mse: arm.train_mse, val_mse: arm.val_mse }
    }
}

/// Summary of a CNN+GBM run, optionally with the derived-covariate arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub grid: GridOutcome,
    pub chosen: GbmHyperparams,
    pub feature_scale: usize,
    pub encoder_best_epoch: usize,
    pub encoder_log: Vec<EpochLog>,
    pub train_mse: f64,
    pub val_mse: f64,
    pub test_mse: f64,
    /// Derived arm first, then the CNN arm; empty without an ablation.
    pub ablation: Vec<AblationRow>,
}

impl ExperimentReport {
    /// `test_mse` is scored here from the run's test predictions.
    pub fn new(run: &CnnGbmRun, answers: &[SealedAnswer], derived: Option<&ArmResult>) -> Result<Self> {
        let test_mse = score_against(&run.arm.predictions.test, answers)?;
        let ablation = match derived {
            Some(d) => alloc::vec![AblationRow::of(d), AblationRow::of(&run.arm)],
            None => Vec::new(),
        };
        Ok(Self {
            grid: run.arm.grid.clone(),
            chosen: run.arm.grid.best,
            feature_scale: run.scale.0,
            encoder_best_epoch: run.encoder.best_epoch,
            encoder_log: run.encoder.log.clone(),
            train_mse: run.arm.train_mse,
            val_mse: run.arm.val_mse,
            test_mse,
            ablation,
        })
    }

    /// Human-readable report.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let h = &self.chosen;
        let _ = writeln!(s, "# voxboost experiment report\n");
        let _ = writeln!(s, "feature scale: {0}x{0}x{0}", self.feature_scale);
        let _ = writeln!(s, "encoder best epoch: {}", self.encoder_best_epoch);
        let _ = writeln!(s, "\nencoder epochs (covariate MSE):");
        let _ = writeln!(s, "  {:>5}  {:>12}  {:>12}", "epoch", "train", "val");
        for e in &self.encoder_log {
            let _ = writeln!(s, "  {:>5}  {:>12.6}  {:>12.6}", e.epoch, e.train_mse, e.val_mse);
        }
        let _ = writeln!(
            s,
            "\nchosen: learning_rate={} n_trees={} max_depth={} lambda={} alpha={} subsample={} seed={}",
            h.learning_rate, h.n_trees, h.max_depth, h.lambda, h.alpha, h.subsample, h.seed
        );
        let _ = writeln!(s, "\n{:<8} {:>12}", "split", "MSE");
        for (name, v) in [("train", self.train_mse), ("val", self.val_mse), ("test", self.test_mse)] {
            let _ = writeln!(s, "{name:<8} {v:>12.4}");
        }
        if !self.ablation.is_empty() {
            let _ = writeln!(s, "\n{:<14} {:>12} {:>12}", "Method", "Train MSE", "Val MSE");
            for r in &self.ablation {
                let _ = writeln!(s, "{:<14} {:>12.4} {:>12.4}", r.method, r.train_mse, r.val_mse);
            }
        }
        let _ = writeln!(s, "\ngrid ({} configurations):", self.grid.rows.len());
        let _ = writeln!(
            s,
            "  {:>5} {:>5} {:>10} {:>6} {:>5} {:>7} {:>6} {:>12} {:>12}",
            "stage", "index", "lr", "trees", "depth", "lambda", "alpha", "train", "val"
        );
        for r in &self.grid.rows {
            let h = &r.hyperparams;
            let _ = writeln!(
                s,
                "  {:>5} {:>5} {:>10} {:>6} {:>5} {:>7} {:>6} {:>12.4} {:>12.4}",
                r.stage, r.index, h.learning_rate, h.n_trees, h.max_depth, h.lambda, h.alpha, r.train_mse, r.val_mse
            );
        }
        s
    }
}

/// Both arms under the same grid and seeds.
#[derive(Debug, Clone)]
pub struct AblationRun {
    pub derived: ArmResult,
    pub cnn: CnnGbmRun,
    pub report: ExperimentReport,
}

#[allow(clippy::too_many_arguments)]
pub fn run_ablation<E: Executor>(
    records: &[SubjectRecord],
    volumes: &[VolumeTensor],
    answers: &[SealedAnswer],
    encoder_cfg: &EncoderConfig,
    sgd: &SgdMomentumConfig,
    scale: FeatureScale,
    grid: &GridSpec,
    exec: &E,
) -> Result<AblationRun> {
    let derived_features: Vec<Vec<f64>> = records.iter().map(SubjectRecord::derived_f64).collect();
    let derived = fit_gbm_arm(DERIVED_METHOD, &derived_features, records, grid, exec)?;
    let cnn = run_cnn_gbm(records, volumes, encoder_cfg, sgd, scale, grid, exec)?;
    let report = ExperimentReport::new(&cnn, answers, Some(&derived))?;
    Ok(AblationRun { derived, cnn, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn answers(pairs: &[(&str, f64)]) -> Vec<SealedAnswer> {
        pairs.iter().map(|(id, v)| SealedAnswer { subject_id: (*id).into(), residual_score: *v }).collect()
    }

    #[test]
    fn score_matches_by_id() {
        let a = answers(&[("b", 0.0), ("a", 0.0)]);
        let p = vec![("a".into(), 1.0), ("b".into(), 3.0)];
        assert_eq!(score_against(&p, &a).unwrap(), 5.0);
    }

    #[test]
    fn score_rejects_mismatched_ids() {
        let a = answers(&[("a", 0.0), ("b", 0.0)]);
        assert!(score_against(&[("a".into(), 1.0)], &a).is_err());
        assert!(score_against(&[("a".into(), 1.0), ("a".into(), 1.0)], &a).is_err());
        assert!(score_against(&[("a".into(), 1.0), ("c".into(), 1.0)], &a).is_err());
        assert!(score_against(&[("a".into(), 1.0), ("b".into(), 1.0)], &answers(&[("a", 0.0), ("a", 0.0)])).is_err());
    }

    #[test]
    fn input_norm_scales_labels() {
        let v = VolumeTensor::new([2, 1, 1, 2], vec![1.0, 3.0, 0.0, 3.0]).unwrap();
        let n = InputNorm { intensity_mean: 2.0, intensity_std: 1.0 };
        assert_eq!(n.apply(&v).unwrap().data(), &[-1.0, 1.0, 0.0, 1.0]);
    }
}
