//! CSV artifacts. Reals use Rust's shortest round-trip formatting and
//! missing values are empty fields.

use std::path::Path;

use voxboost_core::encoder::EpochLog;
use voxboost_core::gbm::GbmHyperparams;
use voxboost_core::pipeline::GridRow;
use voxboost_core::synth::{DemographicCovariates, Fold, SealedAnswer, SubjectRecord, N_REGIONS};

use crate::error::{CliError, CliResult};

const DEMOGRAPHICS: [&str; 8] = [
    "brain_volume",
    "site",
    "age_months",
    "sex",
    "ethnicity",
    "parental_education",
    "parental_income",
    "marital_status",
];

fn writer(path: &Path) -> CliResult<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new().from_path(path).map_err(|e| CliError::from_csv(path, e))
}

fn reader(path: &Path) -> CliResult<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new().from_path(path).map_err(|e| CliError::from_csv(path, e))
}

fn write_all(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| CliError::from_csv(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::from_csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Header plus data rows; the header must equal `expected` when given.
fn read_all(path: &Path, expected: Option<&[String]>) -> CliResult<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut r = reader(path)?;
    let header: Vec<String> =
        r.headers().map_err(|e| CliError::from_csv(path, e))?.iter().map(str::to_string).collect();
    if let Some(exp) = expected {
        if header != exp {
            return Err(CliError::format(path, format!("unexpected header {header:?}, expected {exp:?}")));
        }
    }
    let rows = r.records().collect::<Result<Vec<_>, _>>().map_err(|e| CliError::from_csv(path, e))?;
    Ok((header, rows))
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

fn parse<T: std::str::FromStr>(path: &Path, row: usize, col: &str, s: &str) -> CliResult<T> {
    s.parse().map_err(|_| CliError::format(path, format!("row {}: column {col}: cannot parse {s:?}", row + 1)))
}

fn parse_opt<T: std::str::FromStr>(path: &Path, row: usize, col: &str, s: &str) -> CliResult<Option<T>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse(path, row, col, s).map(Some)
    }
}

fn strs(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn manifest_header() -> Vec<String> {
    let mut h = strs(&["subject_id", "fold", "volume_path", "raw_score", "residual_score"]);
    h.extend(strs(&DEMOGRAPHICS));
    h.extend((1..=N_REGIONS).map(|j| format!("d{j:03}")));
    h
}

/// One row per subject. Test-fold rows leave `raw_score` empty: with the
/// other rows it would reveal the sealed residuals.
pub fn write_manifest(path: &Path, records: &[SubjectRecord]) -> CliResult<()> {
    let rows = records.iter().map(|r| {
        let d = &r.demographics;
        let raw = if r.fold == Fold::Test { String::new() } else { r.raw_score.to_string() };
        let mut row =
            vec![r.subject_id.clone(), r.fold.to_string(), r.volume_path.clone(), raw, opt(&r.residual_score)];
        row.extend([
            opt(&d.brain_volume),
            opt(&d.site),
            opt(&d.age_months),
            opt(&d.sex),
            opt(&d.ethnicity),
            opt(&d.parental_education),
            opt(&d.parental_income),
            opt(&d.marital_status),
        ]);
        row.extend(r.derived.iter().map(u32::to_string));
        row
    });
    write_all(path, &manifest_header(), rows)
}

/// Inverse of [`write_manifest`]; a blank raw score reads back as NaN.
pub fn read_manifest(path: &Path) -> CliResult<Vec<SubjectRecord>> {
    let (_, rows) = read_all(path, Some(&manifest_header()))?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let f = |k: usize| &r[k];
            let fold = Fold::parse(f(1))
                .ok_or_else(|| CliError::format(path, format!("row {}: bad fold {:?}", i + 1, f(1))))?;
            let text = |k: usize| Some(f(k).to_string()).filter(|s| !s.is_empty());
            let demographics = DemographicCovariates {
                brain_volume: parse_opt(path, i, "brain_volume", f(5))?,
                site: text(6),
                age_months: parse_opt(path, i, "age_months", f(7))?,
                sex: text(8),
                ethnicity: text(9),
                parental_education: parse_opt(path, i, "parental_education", f(10))?,
                parental_income: parse_opt(path, i, "parental_income", f(11))?,
                marital_status: text(12),
            };
            let derived =
                (13..13 + N_REGIONS).map(|k| parse(path, i, "derived", f(k))).collect::<CliResult<Vec<u32>>>()?;
            Ok(SubjectRecord {
                subject_id: f(0).to_string(),
                volume_path: f(2).to_string(),
                derived,
                demographics,
                raw_score: parse_opt(path, i, "raw_score", f(3))?.unwrap_or(f64::NAN),
                residual_score: parse_opt(path, i, "residual_score", f(4))?,
                fold,
            })
        })
        .collect()
}

fn pairs_header(value: &str) -> Vec<String> {
    strs(&["subject_id", value])
}

fn write_pairs(path: &Path, value: &str, pairs: &[(String, f64)]) -> CliResult<()> {
    write_all(path, &pairs_header(value), pairs.iter().map(|(id, v)| vec![id.clone(), v.to_string()]))
}

fn read_pairs(path: &Path, value: &str) -> CliResult<Vec<(String, f64)>> {
    let (_, rows) = read_all(path, Some(&pairs_header(value)))?;
    rows.iter().enumerate().map(|(i, r)| Ok((r[0].to_string(), parse(path, i, value, &r[1])?))).collect()
}

/// Any two-column `subject_id,<value>` file, whatever the value column is named.
pub fn read_scored_pairs(path: &Path) -> CliResult<Vec<(String, f64)>> {
    let (header, rows) = read_all(path, None)?;
    if header.len() != 2 || header[0] != "subject_id" {
        return Err(CliError::format(path, format!("expected a `subject_id,<value>` header, found {header:?}")));
    }
    rows.iter().enumerate().map(|(i, r)| Ok((r[0].to_string(), parse(path, i, &header[1], &r[1])?))).collect()
}

pub fn write_predictions(path: &Path, preds: &[(String, f64)]) -> CliResult<()> {
    write_pairs(path, "prediction", preds)
}

pub fn read_predictions(path: &Path) -> CliResult<Vec<(String, f64)>> {
    read_pairs(path, "prediction")
}

pub fn write_answers(path: &Path, answers: &[SealedAnswer]) -> CliResult<()> {
    let pairs: Vec<(String, f64)> = answers.iter().map(|a| (a.subject_id.clone(), a.residual_score)).collect();
    write_pairs(path, "residual_score", &pairs)
}

pub fn read_answers(path: &Path) -> CliResult<Vec<SealedAnswer>> {
    Ok(read_pairs(path, "residual_score")?
        .into_iter()
        .map(|(subject_id, residual_score)| SealedAnswer { subject_id, residual_score })
        .collect())
}

/// `subject_id, f0000, f0001, ...`
pub fn write_features(path: &Path, ids: &[String], rows: &[Vec<f64>]) -> CliResult<()> {
    let width = rows.first().map_or(0, Vec::len);
    let mut header = vec!["subject_id".to_string()];
    header.extend((0..width).map(|j| format!("f{j:04}")));
    let body = ids.iter().zip(rows).map(|(id, r)| {
        let mut row = vec![id.clone()];
        row.extend(r.iter().map(f64::to_string));
        row
    });
    write_all(path, &header, body)
}

pub fn read_features(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let (header, rows) = read_all(path, None)?;
    if header.first().map(String::as_str) != Some("subject_id") {
        return Err(CliError::format(path, "first column must be subject_id"));
    }
    let mut ids = Vec::with_capacity(rows.len());
    let mut feats = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        ids.push(r[0].to_string());
        feats.push(r.iter().skip(1).map(|s| parse(path, i, "feature", s)).collect::<CliResult<Vec<f64>>>()?);
    }
    Ok((ids, feats))
}

fn grid_header() -> Vec<String> {
    strs(&[
        "stage",
        "index",
        "learning_rate",
        "n_trees",
        "max_depth",
        "lambda",
        "alpha",
        "subsample",
        "seed",
        "train_mse",
        "val_mse",
    ])
}

pub fn write_grid(path: &Path, rows: &[GridRow]) -> CliResult<()> {
    let body = rows.iter().map(|r| {
        let h = &r.hyperparams;
        vec![
            r.stage.to_string(),
            r.index.to_string(),
            h.learning_rate.to_string(),
            h.n_trees.to_string(),
            h.max_depth.to_string(),
            h.lambda.to_string(),
            h.alpha.to_string(),
            h.subsample.to_string(),
            h.seed.to_string(),
            r.train_mse.to_string(),
            r.val_mse.to_string(),
        ]
    });
    write_all(path, &grid_header(), body)
}

pub fn read_grid(path: &Path) -> CliResult<Vec<GridRow>> {
    let (_, rows) = read_all(path, Some(&grid_header()))?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(GridRow {
                stage: parse(path, i, "stage", &r[0])?,
                index: parse(path, i, "index", &r[1])?,
                hyperparams: GbmHyperparams {
                    learning_rate: parse(path, i, "learning_rate", &r[2])?,
                    n_trees: parse(path, i, "n_trees", &r[3])?,
                    max_depth: parse(path, i, "max_depth", &r[4])?,
                    lambda: parse(path, i, "lambda", &r[5])?,
                    alpha: parse(path, i, "alpha", &r[6])?,
                    subsample: parse(path, i, "subsample", &r[7])?,
                    seed: parse(path, i, "seed", &r[8])?,
                },
                train_mse: parse(path, i, "train_mse", &r[9])?,
                val_mse: parse(path, i, "val_mse", &r[10])?,
            })
        })
        .collect()
}

fn log_header() -> Vec<String> {
    strs(&["epoch", "train_mse", "val_mse"])
}

pub fn write_epoch_log(path: &Path, log: &[EpochLog]) -> CliResult<()> {
    write_all(
        path,
        &log_header(),
        log.iter().map(|e| vec![e.epoch.to_string(), e.train_mse.to_string(), e.val_mse.to_string()]),
    )
}

pub fn read_epoch_log(path: &Path) -> CliResult<Vec<EpochLog>> {
    let (_, rows) = read_all(path, Some(&log_header()))?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(EpochLog {
                epoch: parse(path, i, "epoch", &r[0])?,
                train_mse: parse(path, i, "train_mse", &r[1])?,
                val_mse: parse(path, i, "val_mse", &r[2])?,
            })
        })
        .collect()
}
