use proptest::prelude::*;
use voxboost::config::{read_hyperparams, render_hyperparams};
use voxboost::formats::checkpoint::{self, Checkpoint};
use voxboost::formats::{gbm_text, tables, vvol};
use voxboost::RunConfig;
use voxboost_core::encoder::{EncoderConfig, EncoderModel, EpochLog, VolumeTensor};
use voxboost_core::gbm::{fit, FeatureMatrix, GbmHyperparams, TargetVector};
use voxboost_core::pipeline::{GridRow, InputNorm};
use voxboost_core::synth::{generate_cohort, residualize, CohortConfig, Fold, SealedAnswer};

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6f64..1e6, -1e-6f64..1e-6, Just(0.0), Just(-0.0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn vvol_round_trips_f32_values(c in 1usize..3, d in 1usize..5, h in 1usize..5, w in 1usize..5, seed in any::<u32>()) {
        let n = c * d * h * w;
        let data: Vec<f64> = (0..n).map(|i| f64::from((i as f32 + seed as f32 * 0.37).sin() * 100.0)).collect();
        let v = VolumeTensor::new([c, d, h, w], data).unwrap();
        let bytes = vvol::encode(&v);
        prop_assert_eq!(bytes.len(), format!("vvol v1 {c} {d} {h} {w}\n").len() + 4 * n);
        prop_assert_eq!(vvol::decode(&bytes).unwrap(), v);
        prop_assert!(vvol::decode(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn gbm_text_round_trip_predicts_bit_identically(
        rows in prop::collection::vec(prop::collection::vec(finite(), 3), 6..30),
        depth in 1usize..4,
        lambda in prop_oneof![Just(0.0), Just(1.05), 0.0f64..3.0],
        alpha in prop_oneof![Just(0.0), Just(0.1)],
        sub in prop_oneof![Just(1.0), 0.5f64..1.0],
    ) {
        let y: Vec<f64> = rows.iter().map(|r| r[0].sin() * 7.0 + r[1] * 1e-3).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let hp = GbmHyperparams { learning_rate: 0.1, n_trees: 12, max_depth: depth, lambda, alpha, subsample: sub, seed: 4 };
        let model = fit(&x, &TargetVector::new(y).unwrap(), &hp).unwrap();
        let text = gbm_text::encode(&model);
        let back = gbm_text::decode(&text).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(gbm_text::encode(&back), text);
        let (a, b) = (model.predict(&x).unwrap(), back.predict(&x).unwrap());
        prop_assert!(a.iter().zip(&b).all(|(u, v)| u.to_bits() == v.to_bits()));
    }

    #[test]
    fn checkpoint_round_trips(seed in any::<u64>(), c1 in 1usize..4, c2 in 1usize..4, mean in finite(), epoch in 0usize..50) {
        let cfg = EncoderConfig { input_size: 24, channel_schedule: vec![c1, c2], kernel: 3 };
        let model = EncoderModel::new(cfg, seed).unwrap();
        let ck = Checkpoint { model, input_norm: InputNorm { intensity_mean: mean, intensity_std: 0.25 }, best_epoch: epoch };
        let bytes = checkpoint::encode(&ck);
        prop_assert_eq!(checkpoint::decode(&bytes).unwrap(), ck);
        prop_assert!(checkpoint::decode(&bytes[..bytes.len() - 8]).is_err());
    }

    #[test]
    fn pair_and_feature_tables_round_trip(values in prop::collection::vec(finite(), 1..20)) {
        let dir = tempfile::tempdir().unwrap();
        let pairs: Vec<(String, f64)> = values.iter().enumerate().map(|(i, v)| (format!("sub{i:04}"), *v)).collect();
        let p = dir.path().join("p.csv");
        tables::write_predictions(&p, &pairs).unwrap();
        prop_assert_eq!(tables::read_predictions(&p).unwrap(), pairs.clone());
        prop_assert_eq!(tables::read_scored_pairs(&p).unwrap(), pairs.clone());

        let answers: Vec<SealedAnswer> =
            pairs.iter().map(|(id, v)| SealedAnswer { subject_id: id.clone(), residual_score: *v }).collect();
        let a = dir.path().join("a.csv");
        tables::write_answers(&a, &answers).unwrap();
        prop_assert_eq!(tables::read_answers(&a).unwrap(), answers);

        let ids: Vec<String> = pairs.iter().map(|p| p.0.clone()).collect();
        let rows: Vec<Vec<f64>> = values.iter().map(|v| vec![*v, -v, v * 0.5]).collect();
        let f = dir.path().join("f.csv");
        tables::write_features(&f, &ids, &rows).unwrap();
        prop_assert_eq!(tables::read_features(&f).unwrap(), (ids, rows));

        let log: Vec<EpochLog> = values.iter().enumerate().map(|(i, v)| EpochLog { epoch: i, train_mse: v.abs(), val_mse: *v }).collect();
        let l = dir.path().join("l.csv");
        tables::write_epoch_log(&l, &log).unwrap();
        prop_assert_eq!(tables::read_epoch_log(&l).unwrap(), log);
    }
}

#[test]
fn grid_and_hyperparams_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let h = GbmHyperparams {
        learning_rate: 0.03,
        n_trees: 300,
        max_depth: 3,
        lambda: 1.05,
        alpha: 0.1,
        subsample: 0.8,
        seed: 17,
    };
    let rows = vec![
        GridRow { stage: 1, index: 0, hyperparams: h, train_mse: 1.5, val_mse: 9.25 },
        GridRow {
            stage: 2,
            index: 3,
            hyperparams: GbmHyperparams { learning_rate: 0.018, ..h },
            train_mse: 0.1,
            val_mse: 1.0 / 3.0,
        },
    ];
    let p = dir.path().join("grid.csv");
    tables::write_grid(&p, &rows).unwrap();
    assert_eq!(tables::read_grid(&p).unwrap(), rows);

    let hp = dir.path().join("best.txt");
    std::fs::write(&hp, render_hyperparams(&h)).unwrap();
    assert_eq!(read_hyperparams(&hp).unwrap(), h);
}

#[test]
fn manifest_round_trips_and_blanks_test_scores() {
    let cfg =
        CohortConfig { n_train: 40, n_val: 10, n_test: 6, volume_size: 15, missing_rate: 0.05, ..Default::default() };
    let records = residualize(generate_cohort(&cfg).unwrap().records, &cfg.vocab).unwrap().records;
    assert!(records.iter().any(|r| r.fold == Fold::Excluded));
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("manifest.csv");
    tables::write_manifest(&p, &records).unwrap();
    let back = tables::read_manifest(&p).unwrap();
    assert_eq!(back.len(), records.len());
    for (a, b) in records.iter().zip(&back) {
        if a.fold == Fold::Test {
            assert!(b.raw_score.is_nan());
            let mut b = b.clone();
            b.raw_score = a.raw_score;
            assert_eq!(*a, b);
        } else {
            assert_eq!(a, b);
        }
    }
}

#[test]
fn malformed_files_are_format_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad");
    for (body, reader) in [
        ("vvol v2 1 1 1 1\n\0\0\0\0", 0),
        ("gbmmodel v1\nlearning_rate 0.1\n", 1),
        ("subject_id,prediction\na,notanumber\n", 2),
        ("id,value\na,1\n", 3),
    ] {
        std::fs::write(&p, body).unwrap();
        let err = match reader {
            0 => vvol::read(&p).map(|_| ()),
            1 => gbm_text::read(&p).map(|_| ()),
            2 => tables::read_predictions(&p).map(|_| ()),
            _ => tables::read_scored_pairs(&p).map(|_| ()),
        }
        .unwrap_err();
        assert_eq!(err.exit_code(), 1, "{err}");
    }
    let missing = dir.path().join("absent.csv");
    assert_eq!(tables::read_predictions(&missing).unwrap_err().exit_code(), 2);
}

#[test]
fn rendered_config_parses_back() {
    let cfg =
        RunConfig::parse("global.seed = 99\ncohort.n_train = 50\nencoder.channels = 2, 3\ngrid.lambda = 0, 0.5\n")
            .unwrap();
    assert_eq!(cfg.cohort.seed, 99);
    assert_eq!(cfg.gbm.seed, 99);
    assert_eq!(RunConfig::parse(&cfg.render()).unwrap(), cfg);
    assert_eq!(RunConfig::parse(&RunConfig::default().render()).unwrap(), RunConfig::default());
}
