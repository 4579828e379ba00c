use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use voxboost_core::synth::{
    design_matrix, fit_ols, generate_cohort, residualize, tissue_class, CohortConfig, Fold, RegionTemplate, N_REGIONS,
};

fn small(seed: u64) -> CohortConfig {
    CohortConfig { n_train: 12, n_val: 5, n_test: 4, volume_size: 15, seed, ..Default::default() }
}

fn pinv_solution(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = rows.len();
    let p = rows[0].len() + 1;
    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] });
    let beta = x.pseudo_inverse(1e-12).unwrap() * DVector::from_column_slice(y);
    beta.iter().copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ols_matches_pseudo_inverse(
        (rows, y) in (2usize..6).prop_flat_map(|k| (
            prop::collection::vec(prop::collection::vec(-3.0f64..3.0, k), 20..40),
            prop::collection::vec(-50.0f64..50.0, 40),
        ))
    ) {
        let y = &y[..rows.len()];
        let names = (0..rows[0].len()).map(|j| format!("c{j}")).collect();
        let fit = fit_ols(&rows, y, names).unwrap();
        let beta = pinv_solution(&rows, y);
        let scale = 1.0 + beta.iter().map(|b| b.abs()).fold(0.0, f64::max);
        prop_assert!((fit.intercept - beta[0]).abs() < 1e-7 * scale);
        for (a, b) in fit.coefficients.iter().zip(&beta[1..]) {
            prop_assert!((a - b).abs() < 1e-7 * scale, "{a} vs {b}");
        }

        let resid: Vec<f64> = rows.iter().zip(y).map(|(r, v)| v - fit.predict(r)).collect();
        let rnorm = resid.iter().map(|r| r * r).sum::<f64>().sqrt().max(1.0);
        prop_assert!(resid.iter().sum::<f64>().abs() / rnorm < 1e-8);
        for j in 0..rows[0].len() {
            let dot: f64 = rows.iter().zip(&resid).map(|(r, e)| r[j] * e).sum();
            let cnorm = rows.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt().max(1.0);
            prop_assert!(dot.abs() / (cnorm * rnorm) < 1e-8);
        }
    }
}

#[test]
fn collinear_columns_are_reported() {
    let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
    let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
    assert!(fit_ols(&rows, &y, vec!["a".into(), "b".into()]).is_err());
}

#[test]
fn folds_have_requested_sizes_and_are_seeded() {
    let a = generate_cohort(&small(5)).unwrap();
    let b = generate_cohort(&small(5)).unwrap();
    let c = generate_cohort(&small(6)).unwrap();
    let count = |f: Fold| a.records.iter().filter(|r| r.fold == f).count();
    assert_eq!((count(Fold::Train), count(Fold::Validation), count(Fold::Test)), (12, 5, 4));
    assert_eq!(a.records, b.records);
    assert_eq!(a.volumes, b.volumes);
    assert_ne!(a.records, c.records);
}

#[test]
fn derived_counts_match_label_channel() {
    let cfg = small(9);
    let template = RegionTemplate::new(cfg.volume_size).unwrap();
    let cohort = generate_cohort(&cfg).unwrap();
    let s = cfg.volume_size;
    for (rec, vol) in cohort.records.iter().zip(&cohort.volumes) {
        assert_eq!(vol.dims(), [2, s, s, s]);
        let mut counts = vec![0u32; N_REGIONS];
        for z in 0..s {
            for y in 0..s {
                for x in 0..s {
                    let label = vol.get(1, z, y, x);
                    if label != 0.0 {
                        let j = template.region_at(x, y, z).expect("labelled voxel inside a region cell");
                        assert_eq!(label, f64::from(tissue_class(j)));
                        counts[j] += 1;
                    }
                }
            }
        }
        assert_eq!(counts, rec.derived);
        assert!(rec.derived.iter().all(|&c| c > 0));
    }
}

#[test]
fn test_subjects_are_complete_and_sealed() {
    let cfg = CohortConfig { n_train: 80, n_val: 20, missing_rate: 0.05, ..small(11) };
    let cohort = generate_cohort(&cfg).unwrap();
    let test_ids: Vec<String> =
        cohort.records.iter().filter(|r| r.fold == Fold::Test).map(|r| r.subject_id.clone()).collect();
    assert!(cohort.records.iter().filter(|r| r.fold == Fold::Test).all(|r| r.demographics.is_complete()));
    let incomplete = cohort.records.iter().filter(|r| !r.demographics.is_complete()).count();
    assert!(incomplete > 0);

    let out = residualize(cohort.records, &cfg.vocab).unwrap();
    assert_eq!(out.records.iter().filter(|r| r.fold == Fold::Excluded).count(), incomplete);
    for r in &out.records {
        assert_eq!(r.residual_score.is_some(), matches!(r.fold, Fold::Train | Fold::Validation));
    }
    let sealed: Vec<String> = out.sealed.iter().map(|a| a.subject_id.clone()).collect();
    assert_eq!(sealed, test_ids);
}

#[test]
fn residuals_are_orthogonal_to_design() {
    let cfg = CohortConfig { n_train: 120, n_val: 30, n_test: 10, ..small(3) };
    let cohort = generate_cohort(&cfg).unwrap();
    let out = residualize(cohort.records, &cfg.vocab).unwrap();
    let fitted: Vec<_> = out.records.iter().filter(|r| r.residual_score.is_some()).collect();
    let design = design_matrix(&fitted, &cfg.vocab).unwrap();
    let resid: Vec<f64> = fitted.iter().map(|r| r.residual_score.unwrap()).collect();
    let rnorm = resid.iter().map(|r| r * r).sum::<f64>().sqrt();
    assert!(resid.iter().sum::<f64>().abs() / rnorm < 1e-6);
    for j in 0..design.columns.len() {
        let col: Vec<f64> = design.rows.iter().map(|r| r[j]).collect();
        let cnorm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if cnorm == 0.0 {
            continue;
        }
        let dot: f64 = col.iter().zip(&resid).map(|(a, b)| a * b).sum();
        assert!(dot.abs() / (cnorm * rnorm) < 1e-6, "column {}", design.columns[j]);
    }
}
