use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::cohort::{SubjectRecord, Vocabularies};
use super::folds::Fold;
use crate::error::{config_err, invalid, Result};

/// Ridge added to the diagonal of the column-equilibrated Gram matrix.
pub const GRAM_JITTER: f64 = 1e-8;
/// A Cholesky pivot this small (relative to the unit diagonal) means the
/// column is a linear combination of earlier ones.
const COLLINEAR_PIVOT: f64 = 10.0 * GRAM_JITTER;
const REFINEMENT_STEPS: usize = 3;

/// `y ≈ intercept + coefficients · x` over the named design columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModelFit {
    pub columns: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LinearModelFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
    }
}

/// Design rows without the intercept column.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SealedAnswer {
    pub subject_id: String,
    pub residual_score: f64,
}

#[derive(Debug, Clone)]
pub struct Residualized {
    pub records: Vec<SubjectRecord>,
    pub fit: LinearModelFit,
    /// Test-fold residuals, withheld from the records.
    pub sealed: Vec<SealedAnswer>,
}

/// Column names of the full demographic design, in order: the four numeric
/// covariates, then one indicator per non-reference categorical level.
pub fn design_columns(vocab: &Vocabularies) -> Vec<String> {
    let mut cols: Vec<String> =
        ["brain_volume", "age_months", "parental_education", "parental_income"].iter().map(|s| s.to_string()).collect();
    for (name, levels) in categorical(vocab) {
        for level in &levels[1..] {
            cols.push(alloc::format!("{name}={level}"));
        }
    }
    cols
}

fn categorical(vocab: &Vocabularies) -> [(&'static str, &[String]); 4] {
    [
        ("site", &vocab.site),
        ("sex", &vocab.sex),
        ("ethnicity", &vocab.ethnicity),
        ("marital_status", &vocab.marital_status),
    ]
}

fn design_row(r: &SubjectRecord, vocab: &Vocabularies) -> Result<Vec<f64>> {
    let d = &r.demographics;
    let missing = || invalid!("subject {} has missing covariates", r.subject_id);
    let mut row = vec![
        d.brain_volume.ok_or_else(missing)?,
        d.age_months.ok_or_else(missing)?,
        f64::from(d.parental_education.ok_or_else(missing)?),
        f64::from(d.parental_income.ok_or_else(missing)?),
    ];
    let values = [&d.site, &d.sex, &d.ethnicity, &d.marital_status];
    for ((name, levels), value) in categorical(vocab).into_iter().zip(values) {
        let value = value.as_deref().ok_or_else(missing)?;
        let idx = levels
            .iter()
            .position(|l| l == value)
            .ok_or_else(|| invalid!("subject {}: {name} level {value:?} not in vocabulary", r.subject_id))?;
        row.extend((1..levels.len()).map(|l| if l == idx { 1.0 } else { 0.0 }));
    }
    Ok(row)
}

/// One-hot design (first level dropped) for complete records.
pub fn design_matrix(records: &[&SubjectRecord], vocab: &Vocabularies) -> Result<Design> {
    let rows = records.iter().map(|r| design_row(r, vocab)).collect::<Result<Vec<_>>>()?;
    Ok(Design { columns: design_columns(vocab), rows })
}

/// Ordinary least squares with intercept via the normal equations.
///
/// Columns (intercept included) are scaled to unit norm, [`GRAM_JITTER`] is
/// added to the Gram diagonal, and the jittered Cholesky solve is followed by
/// iterative refinement against the unjittered system. Columns whose pivot
/// collapses are reported together as a configuration error.
pub fn fit_ols(rows: &[Vec<f64>], y: &[f64], columns: Vec<String>) -> Result<LinearModelFit> {
    let n = rows.len();
    if n == 0 || n != y.len() {
        return Err(invalid!("OLS needs matching non-empty rows and targets ({n} vs {})", y.len()));
    }
    let k = columns.len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(invalid!("design rows must have {k} columns"));
    }
    let p = k + 1;
    let value = |i: usize, j: usize| if j == 0 { 1.0 } else { rows[i][j - 1] };

    let mut norm = vec![0.0; p];
    for (j, s) in norm.iter_mut().enumerate() {
        *s = libm::sqrt((0..n).map(|i| value(i, j) * value(i, j)).sum::<f64>());
    }
    let scale: Vec<f64> = norm.iter().map(|&s| if s > 0.0 { s } else { 1.0 }).collect();

    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    for (i, &yi) in y.iter().enumerate().take(n) {
        for a in 0..p {
            let va = value(i, a) / scale[a];
            rhs[a] += va * yi;
            for b in a..p {
                gram[a * p + b] += va * value(i, b) / scale[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[a * p + b] = gram[b * p + a];
        }
    }

    let mut jittered = gram.clone();
    for a in 0..p {
        jittered[a * p + a] += GRAM_JITTER;
    }
    let chol = cholesky(&jittered, p);
    if !chol.collinear.is_empty() {
        let names: Vec<&str> =
            chol.collinear.iter().map(|&j| if j == 0 { "(intercept)" } else { columns[j - 1].as_str() }).collect();
        return Err(config_err!("rank-deficient design, collinear columns: {}", names.join(", ")));
    }

    let mut beta = chol.solve(&rhs);
    for _ in 0..REFINEMENT_STEPS {
        let resid: Vec<f64> = (0..p).map(|a| rhs[a] - (0..p).map(|b| gram[a * p + b] * beta[b]).sum::<f64>()).collect();
        let delta = chol.solve(&resid);
        for (b, d) in beta.iter_mut().zip(delta) {
            *b += d;
        }
    }
    for (b, s) in beta.iter_mut().zip(&scale) {
        *b /= s;
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(config_err!("OLS produced non-finite coefficients"));
    }
    Ok(LinearModelFit { columns, intercept: beta[0], coefficients: beta[1..].to_vec() })
}

struct Cholesky {
    lower: Vec<f64>,
    p: usize,
    collinear: Vec<usize>,
}

fn cholesky(a: &[f64], p: usize) -> Cholesky {
    let mut l = vec![0.0; p * p];
    let mut collinear = Vec::new();
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= l[j * p + k] * l[j * p + k];
        }
        if d <= COLLINEAR_PIVOT * a[j * p + j].max(1.0) {
            collinear.push(j);
            d = d.max(GRAM_JITTER);
        }
        let ljj = libm::sqrt(d);
        l[j * p + j] = ljj;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            l[i * p + j] = s / ljj;
        }
    }
    Cholesky { lower: l, p, collinear }
}

impl Cholesky {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (l, p) = (&self.lower, self.p);
        let mut z = b.to_vec();
        for i in 0..p {
            for k in 0..i {
                z[i] -= l[i * p + k] * z[k];
            }
            z[i] /= l[i * p + i];
        }
        for i in (0..p).rev() {
            for k in i + 1..p {
                z[i] -= l[k * p + i] * z[k];
            }
            z[i] /= l[i * p + i];
        }
        z
    }
}

/// Regresses raw scores on the demographic design over complete
/// train/validation subjects and stores `raw - fitted` as the residual score.
///
/// Train/validation subjects with any missing covariate are moved to
/// [`Fold::Excluded`]. Test-fold residuals are computed with the same fit but
/// returned only in `sealed`. Indicator columns of levels that never occur
/// among the fitted subjects are dropped before fitting.
pub fn residualize(mut records: Vec<SubjectRecord>, vocab: &Vocabularies) -> Result<Residualized> {
    for r in &mut records {
        r.residual_score = None;
        if r.fold != Fold::Excluded && !r.demographics.is_complete() {
            r.fold = Fold::Excluded;
        }
    }
    let fit_idx: Vec<usize> =
        (0..records.len()).filter(|&i| matches!(records[i].fold, Fold::Train | Fold::Validation)).collect();
    if fit_idx.is_empty() {
        return Err(invalid!("no complete train/validation subjects to residualize"));
    }
    let fit_records: Vec<&SubjectRecord> = fit_idx.iter().map(|&i| &records[i]).collect();
    let design = design_matrix(&fit_records, vocab)?;
    let keep: Vec<usize> =
        (0..design.columns.len()).filter(|&j| j < 4 || design.rows.iter().any(|r| r[j] != 0.0)).collect();
    let select = |row: &[f64]| keep.iter().map(|&j| row[j]).collect::<Vec<f64>>();
    let rows: Vec<Vec<f64>> = design.rows.iter().map(|r| select(r)).collect();
    let y: Vec<f64> = fit_records.iter().map(|r| r.raw_score).collect();
    let names = keep.iter().map(|&j| design.columns[j].clone()).collect();
    let fit = fit_ols(&rows, &y, names)?;

    let mut sealed = Vec::new();
    for r in &mut records {
        match r.fold {
            Fold::Train | Fold::Validation => {
                r.residual_score = Some(r.raw_score - fit.predict(&select(&design_row(r, vocab)?)));
            }
            Fold::Test => sealed.push(SealedAnswer {
                subject_id: r.subject_id.clone(),
                residual_score: r.raw_score - fit.predict(&select(&design_row(r, vocab)?)),
            }),
            Fold::Excluded => {}
        }
    }
    Ok(Residualized { records, fit, sealed })
}
