//! One function per subcommand. Each stage reads its inputs from and writes
//! its outputs to the work directory, so stages can be rerun in isolation.

use std::fs;
use std::path::{Path, PathBuf};

use voxboost_core::encoder::{FeatureScale, VolumeTensor};
use voxboost_core::gbm::{fit, GbmHyperparams};
use voxboost_core::pipeline::{
    extract_features_all, feature_rows, fit_gbm_arm, residual_targets, score_against, two_stage_grid_search,
    AblationRow, EncoderStage, ExperimentReport, FoldSplit, GridOutcome, CNN_METHOD, DERIVED_METHOD,
};
use voxboost_core::synth::{residualize, CohortGenerator, Fold, SealedAnswer, SubjectRecord};

use crate::config::{read_hyperparams, render_hyperparams, RunConfig};
use crate::error::{CliError, CliResult};
use crate::exec::ThreadExecutor;
use crate::formats::checkpoint::{self, Checkpoint};
use crate::formats::{gbm_text, tables, vvol};

/// Paths of every artifact under the work directory.
#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("cohort/manifest.csv")
    }

    pub fn volume(&self, record: &SubjectRecord) -> PathBuf {
        self.root.join("cohort").join(&record.volume_path)
    }

    pub fn answers(&self) -> PathBuf {
        self.root.join("sealed/answers_test.csv")
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.root.join("encoder/checkpoint.vxck")
    }

    pub fn encoder_log(&self) -> PathBuf {
        self.root.join("encoder/train_log.csv")
    }

    pub fn features(&self, scale: usize) -> PathBuf {
        self.root.join(format!("features/features_{scale}.csv"))
    }

    pub fn grid(&self, scale: usize) -> PathBuf {
        self.root.join(format!("gbm/grid_{scale}.csv"))
    }

    pub fn best_hyperparams(&self, scale: usize) -> PathBuf {
        self.root.join(format!("gbm/best_hyperparams_{scale}.txt"))
    }

    pub fn model(&self, scale: usize) -> PathBuf {
        self.root.join(format!("gbm/model_{scale}.gbm"))
    }

    pub fn predictions(&self, scale: usize, fold: Fold) -> PathBuf {
        self.root.join(format!("predictions/scale{scale}/predictions_{fold}.csv"))
    }

    pub fn ablation_dir(&self) -> PathBuf {
        self.root.join("ablation")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("reports/report.txt")
    }

    pub fn report_grid(&self) -> PathBuf {
        self.root.join("reports/grid.csv")
    }
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub layout: Layout,
    pub exec: ThreadExecutor,
}

impl Context {
    pub fn new(config: RunConfig, workdir: Option<PathBuf>, workers: usize) -> Self {
        let root = workdir.unwrap_or_else(|| config.workdir.clone());
        Self { config, layout: Layout::new(root), exec: ThreadExecutor::new(workers) }
    }

    fn scale(&self, scale: Option<usize>) -> usize {
        scale.unwrap_or(self.config.feature_scale)
    }
}

pub const EVAL_FOLDS: [Fold; 3] = [Fold::Train, Fold::Validation, Fold::Test];

fn create_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    create_parent(path)?;
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Fails with the producing stage's name when `path` does not exist.
fn require(path: &Path, stage: &'static str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Missing { path: path.to_path_buf(), stage })
    }
}

fn load_manifest(ctx: &Context) -> CliResult<Vec<SubjectRecord>> {
    let path = ctx.layout.manifest();
    require(&path, "synth")?;
    tables::read_manifest(&path)
}

fn load_volumes(ctx: &Context, records: &[SubjectRecord]) -> CliResult<Vec<VolumeTensor>> {
    records
        .iter()
        .map(|r| {
            let p = ctx.layout.volume(r);
            require(&p, "synth")?;
            vvol::read(&p)
        })
        .collect()
}

/// Feature rows in manifest order.
fn load_features(ctx: &Context, records: &[SubjectRecord], scale: usize) -> CliResult<Vec<Vec<f64>>> {
    let path = ctx.layout.features(scale);
    require(&path, "extract")?;
    let (ids, rows) = tables::read_features(&path)?;
    if ids.len() != records.len() || ids.iter().zip(records).any(|(id, r)| *id != r.subject_id) {
        return Err(CliError::format(&path, "subject ids do not match the manifest; rerun `voxboost extract`"));
    }
    Ok(rows)
}

pub fn cmd_synth(ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.config.cohort;
    let generator = CohortGenerator::new(cfg.clone())?;
    let mut records = Vec::with_capacity(generator.len());
    let mut created_dir = false;
    for i in 0..generator.len() {
        let (record, volume) = generator.subject(i);
        let path = ctx.layout.volume(&record);
        if !created_dir {
            create_parent(&path)?;
            created_dir = true;
        }
        vvol::write(&path, &volume)?;
        records.push(record);
    }
    let res = residualize(records, &cfg.vocab)?;
    let manifest = ctx.layout.manifest();
    create_parent(&manifest)?;
    tables::write_manifest(&manifest, &res.records)?;
    let answers = ctx.layout.answers();
    create_parent(&answers)?;
    tables::write_answers(&answers, &res.sealed)?;

    let count = |f: Fold| res.records.iter().filter(|r| r.fold == f).count();
    println!(
        "cohort: {} subjects ({} train, {} validation, {} test, {} excluded for missing covariates)",
        res.records.len(),
        count(Fold::Train),
        count(Fold::Validation),
        count(Fold::Test),
        count(Fold::Excluded)
    );
    println!("residualization: {} design columns", res.fit.columns.len());
    println!("wrote {} and {}", manifest.display(), answers.display());
    Ok(())
}

pub fn cmd_train_encoder(ctx: &Context) -> CliResult<()> {
    let records = load_manifest(ctx)?;
    let volumes = load_volumes(ctx, &records)?;
    let stage = EncoderStage::fit(&records, &volumes, &ctx.config.encoder, &ctx.config.sgd, &ctx.exec)?;
    let ck_path = ctx.layout.checkpoint();
    create_parent(&ck_path)?;
    checkpoint::write(
        &ck_path,
        &Checkpoint { model: stage.model, input_norm: stage.input_norm, best_epoch: stage.best_epoch },
    )?;
    tables::write_epoch_log(&ctx.layout.encoder_log(), &stage.log)?;
    for e in &stage.log {
        println!("epoch {:>3}  train {:.6}  val {:.6}", e.epoch, e.train_mse, e.val_mse);
    }
    println!("best epoch {}; wrote {}", stage.best_epoch, ck_path.display());
    Ok(())
}

pub fn cmd_extract(ctx: &Context, scale: Option<usize>) -> CliResult<()> {
    let scale = ctx.scale(scale);
    let records = load_manifest(ctx)?;
    let ck_path = ctx.layout.checkpoint();
    require(&ck_path, "train-encoder")?;
    let ck = checkpoint::read(&ck_path)?;
    let volumes = load_volumes(ctx, &records)?;
    let features = extract_features_all(&ck.model, &ck.input_norm, &volumes, FeatureScale(scale), &ctx.exec)?;
    let path = ctx.layout.features(scale);
    create_parent(&path)?;
    let ids: Vec<String> = records.iter().map(|r| r.subject_id.clone()).collect();
    tables::write_features(&path, &ids, &features)?;
    println!(
        "extracted {} features per subject at {scale}^3; wrote {}",
        features.first().map_or(0, Vec::len),
        path.display()
    );
    Ok(())
}

pub fn cmd_gridsearch(ctx: &Context, scale: Option<usize>) -> CliResult<()> {
    let scale = ctx.scale(scale);
    let records = load_manifest(ctx)?;
    let features = load_features(ctx, &records, scale)?;
    let split = FoldSplit::of(&records);
    let tx = feature_rows(&features, &split.train)?;
    let ty = residual_targets(&records, &split.train)?;
    let vx = feature_rows(&features, &split.validation)?;
    let vy = residual_targets(&records, &split.validation)?;
    let outcome = two_stage_grid_search(&tx, &ty, &vx, &vy, &ctx.config.grid, &ctx.exec)?;
    let grid_path = ctx.layout.grid(scale);
    create_parent(&grid_path)?;
    tables::write_grid(&grid_path, &outcome.rows)?;
    write_text(&ctx.layout.best_hyperparams(scale), &render_hyperparams(&outcome.best))?;
    println!("evaluated {} configurations; best validation MSE {}", outcome.rows.len(), outcome.best_val_mse);
    print!("{}", render_hyperparams(&outcome.best));
    Ok(())
}

pub fn cmd_train_gbm(ctx: &Context, scale: Option<usize>, from_config: bool) -> CliResult<()> {
    let scale = ctx.scale(scale);
    let hp: GbmHyperparams = if from_config {
        ctx.config.gbm
    } else {
        let p = ctx.layout.best_hyperparams(scale);
        require(&p, "gridsearch")?;
        read_hyperparams(&p)?
    };
    let records = load_manifest(ctx)?;
    let features = load_features(ctx, &records, scale)?;
    let split = FoldSplit::of(&records);
    let model = fit(&feature_rows(&features, &split.train)?, &residual_targets(&records, &split.train)?, &hp)?;
    let path = ctx.layout.model(scale);
    create_parent(&path)?;
    gbm_text::write(&path, &model)?;
    println!("trained {} stages on {} subjects; wrote {}", model.stages().len(), split.train.len(), path.display());
    Ok(())
}

pub fn cmd_predict(ctx: &Context, fold: Fold, scale: Option<usize>) -> CliResult<PathBuf> {
    let scale = ctx.scale(scale);
    if fold == Fold::Excluded {
        return Err(voxboost_core::Error::InvalidInput("excluded subjects are not scored".into()).into());
    }
    let model_path = ctx.layout.model(scale);
    require(&model_path, "train-gbm")?;
    let model = gbm_text::read(&model_path)?;
    let records = load_manifest(ctx)?;
    let features = load_features(ctx, &records, scale)?;
    let idx: Vec<usize> = (0..records.len()).filter(|&i| records[i].fold == fold).collect();
    let preds = if idx.is_empty() { Vec::new() } else { model.predict(&feature_rows(&features, &idx)?)? };
    let pairs: Vec<(String, f64)> = idx.iter().map(|&i| records[i].subject_id.clone()).zip(preds).collect();
    let path = ctx.layout.predictions(scale, fold);
    create_parent(&path)?;
    tables::write_predictions(&path, &pairs)?;
    println!("wrote {} {fold} predictions to {}", pairs.len(), path.display());
    Ok(path)
}

/// MSE between two `subject_id,<value>` files (predictions, then answers),
/// matched by subject id and accumulated in prediction-file order.
pub fn score_files(predictions: &Path, answers: &Path) -> CliResult<f64> {
    let preds = tables::read_scored_pairs(predictions)?;
    let truth: Vec<SealedAnswer> = tables::read_scored_pairs(answers)?
        .into_iter()
        .map(|(subject_id, residual_score)| SealedAnswer { subject_id, residual_score })
        .collect();
    Ok(score_against(&preds, &truth)?)
}

pub fn cmd_score(predictions: &Path, answers: &Path) -> CliResult<f64> {
    let mse = score_files(predictions, answers)?;
    println!("MSE {mse}");
    Ok(mse)
}

/// Train/validation MSE of stored predictions against manifest residuals.
fn stored_fold_mse(ctx: &Context, records: &[SubjectRecord], scale: usize, fold: Fold) -> CliResult<f64> {
    let path = ctx.layout.predictions(scale, fold);
    require(&path, "predict")?;
    let preds = tables::read_predictions(&path)?;
    let truth: Vec<_> = records
        .iter()
        .filter(|r| r.fold == fold)
        .map(|r| SealedAnswer {
            subject_id: r.subject_id.clone(),
            residual_score: r.residual_score.unwrap_or(f64::NAN),
        })
        .collect();
    score_against(&preds, &truth).map_err(|e| CliError::format(&path, e.to_string()))
}

/// Fits the derived-covariate arm (and optionally the 3³ feature arm), then
/// assembles the report from the stored CNN+GBM artifacts.
pub fn cmd_ablation(ctx: &Context, compare_scales: bool) -> CliResult<ExperimentReport> {
    let scale = ctx.config.feature_scale;
    let records = load_manifest(ctx)?;
    let answers_path = ctx.layout.answers();
    require(&answers_path, "synth")?;

    let dir = ctx.layout.ablation_dir();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let derived_features: Vec<Vec<f64>> = records.iter().map(SubjectRecord::derived_f64).collect();
    let derived = fit_gbm_arm(DERIVED_METHOD, &derived_features, &records, &ctx.config.grid, &ctx.exec)?;
    gbm_text::write(&dir.join("derived_model.gbm"), &derived.model)?;
    tables::write_grid(&dir.join("derived_grid.csv"), &derived.grid.rows)?;
    for fold in EVAL_FOLDS {
        let preds = derived.predictions.fold(fold).unwrap_or_default();
        tables::write_predictions(&dir.join(format!("predictions_derived_{fold}.csv")), preds)?;
    }

    let mut ablation =
        vec![AblationRow { method: DERIVED_METHOD.into(), train_mse: derived.train_mse, val_mse: derived.val_mse }];
    let cnn_row = |s: usize, method: String| -> CliResult<AblationRow> {
        Ok(AblationRow {
            method,
            train_mse: stored_fold_mse(ctx, &records, s, Fold::Train)?,
            val_mse: stored_fold_mse(ctx, &records, s, Fold::Validation)?,
        })
    };
    ablation.push(cnn_row(scale, CNN_METHOD.into())?);
    if compare_scales {
        let other = if scale == FeatureScale::THREE.0 { FeatureScale::SIX.0 } else { FeatureScale::THREE.0 };
        if !ctx.layout.features(other).is_file() {
            cmd_extract(ctx, Some(other))?;
        }
        cmd_gridsearch(ctx, Some(other))?;
        cmd_train_gbm(ctx, Some(other), false)?;
        for fold in EVAL_FOLDS {
            cmd_predict(ctx, fold, Some(other))?;
        }
        ablation.push(cnn_row(other, format!("CNN({other}^3)+GBM"))?);
    }

    let grid_path = ctx.layout.grid(scale);
    require(&grid_path, "gridsearch")?;
    let rows = tables::read_grid(&grid_path)?;
    let best_path = ctx.layout.best_hyperparams(scale);
    require(&best_path, "gridsearch")?;
    let chosen = read_hyperparams(&best_path)?;
    let best_val_mse = rows
        .iter()
        .filter(|r| r.stage == 2 && r.hyperparams == chosen)
        .map(|r| r.val_mse)
        .next()
        .ok_or_else(|| CliError::format(&grid_path, "chosen configuration missing from the fine stage"))?;
    let log_path = ctx.layout.encoder_log();
    require(&log_path, "train-encoder")?;
    let ck_path = ctx.layout.checkpoint();
    require(&ck_path, "train-encoder")?;
    let test_path = ctx.layout.predictions(scale, Fold::Test);
    require(&test_path, "predict")?;

    let report = ExperimentReport {
        grid: GridOutcome { best: chosen, best_val_mse, rows },
        chosen,
        feature_scale: scale,
        encoder_best_epoch: checkpoint::read(&ck_path)?.best_epoch,
        encoder_log: tables::read_epoch_log(&log_path)?,
        train_mse: ablation[1].train_mse,
        val_mse: ablation[1].val_mse,
        test_mse: score_files(&test_path, &answers_path)?,
        ablation,
    };
    let text = report.render();
    write_text(&ctx.layout.report(), &text)?;
    tables::write_grid(&ctx.layout.report_grid(), &report.grid.rows)?;
    print!("{text}");
    Ok(report)
}

/// Every stage in order, ending with the ablation report.
pub fn cmd_pipeline(ctx: &Context, compare_scales: bool) -> CliResult<ExperimentReport> {
    cmd_synth(ctx)?;
    cmd_train_encoder(ctx)?;
    cmd_extract(ctx, None)?;
    cmd_gridsearch(ctx, None)?;
    cmd_train_gbm(ctx, None, false)?;
    for fold in EVAL_FOLDS {
        cmd_predict(ctx, fold, None)?;
    }
    cmd_ablation(ctx, compare_scales)
}

pub fn cmd_print_config(ctx: &Context) {
    print!("{}", ctx.config.render());
}
