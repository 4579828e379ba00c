use proptest::prelude::*;
use voxboost_core::encoder::{
    maxpool3d_backward, maxpool3d_forward, relu_backward, relu_forward, sgd_momentum_step, train, EncoderConfig,
    EncoderModel, Example, FeatureScale, SgdMomentumConfig, VolumeTensor, HEAD_OUTPUTS,
};
use voxboost_core::Sequential;

fn volume(c: usize, s: usize, seed: u64) -> VolumeTensor {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let data = (0..c * s * s * s)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect();
    VolumeTensor::new([c, s, s, s], data).unwrap()
}

#[test]
fn head_emits_one_value_per_region() {
    for (size, channels) in [(24, vec![4, 4]), (48, vec![2, 3, 4]), (12, vec![5])] {
        let cfg = EncoderConfig { input_size: size, channel_schedule: channels.clone(), kernel: 3 };
        let model = EncoderModel::new(cfg.clone(), 1).unwrap();
        let x = volume(2, size, 2);
        assert_eq!(model.predict(&x).unwrap().len(), HEAD_OUTPUTS);
        let last = *channels.last().unwrap();
        assert_eq!(model.extract_features(&x, FeatureScale::SIX).unwrap().len(), last * 216);
        assert_eq!(model.extract_features(&x, FeatureScale::THREE).unwrap().len(), last * 27);
        assert_eq!(cfg.feature_len(FeatureScale::SIX).unwrap(), last * 216);
    }
}

#[test]
fn input_sizes_off_the_ladder_are_rejected() {
    for (size, blocks) in [(15, 1), (24, 1), (24, 3), (36, 2)] {
        let cfg = EncoderConfig { input_size: size, channel_schedule: vec![2; blocks], kernel: 3 };
        assert!(cfg.validate().is_err(), "{size} with {blocks} blocks");
    }
    assert!(EncoderConfig { kernel: 4, ..Default::default() }.validate().is_err());
}

#[test]
fn features_are_nonnegative_and_pooled_consistently() {
    let model = EncoderModel::new(EncoderConfig::default(), 4).unwrap();
    let x = volume(2, 24, 9);
    let six = model.extract_features(&x, FeatureScale::SIX).unwrap();
    let three = model.extract_features(&x, FeatureScale::THREE).unwrap();
    assert!(six.iter().all(|&v| v >= 0.0));
    let c = model.config().channel_schedule[1];
    let map = VolumeTensor::new([c, 6, 6, 6], six).unwrap();
    let (pooled, _) = maxpool3d_forward(&map).unwrap();
    assert_eq!(pooled.data(), &three[..]);
}

#[test]
fn seeded_init_and_training_are_reproducible() {
    let cfg = EncoderConfig { input_size: 12, channel_schedule: vec![2], kernel: 3 };
    let set: Vec<Example> =
        (0..6).map(|i| Example { input: volume(2, 12, i), target: vec![0.1 * i as f64; HEAD_OUTPUTS] }).collect();
    let sgd = SgdMomentumConfig { learning_rate: 0.01, epochs: 3, batch_size: 2, ..Default::default() };
    let run = || train(EncoderModel::new(cfg.clone(), 8).unwrap(), &set[..4], &set[4..], &sgd, &Sequential).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.log, b.log);
    assert_eq!(a.best_epoch, b.best_epoch);
    assert_eq!(a.model.layers(), b.model.layers());
    assert_eq!(a.log.len(), 4);
    let best = a.log.iter().map(|l| l.val_mse).fold(f64::INFINITY, f64::min);
    assert_eq!(a.log[a.best_epoch].val_mse, best);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn momentum_step_matches_recurrence(
        w in prop::collection::vec(-1.0f64..1.0, 1..16),
        lr in 1e-4f64..0.5,
        mu in 0.0f64..0.99,
    ) {
        let g: Vec<f64> = w.iter().map(|v| v * 0.3 - 0.1).collect();
        let v0: Vec<f64> = w.iter().map(|v| -v * 0.2).collect();
        let (mut ww, mut vv) = (w.clone(), v0.clone());
        sgd_momentum_step(&mut ww, &g, &mut vv, lr, mu).unwrap();
        for i in 0..w.len() {
            let v = mu * v0[i] + g[i];
            prop_assert_eq!(vv[i], v);
            prop_assert_eq!(ww[i], w[i] - lr * v);
        }
    }

    #[test]
    fn relu_passes_gradient_only_where_positive(x in prop::collection::vec(-2.0f64..2.0, 1..50)) {
        let y = relu_forward(&x);
        let g = relu_backward(&vec![1.0; x.len()], &x).unwrap();
        for i in 0..x.len() {
            prop_assert_eq!(y[i], x[i].max(0.0));
            prop_assert_eq!(g[i], if x[i] > 0.0 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn pool_routes_gradient_to_window_max(seed in any::<u64>(), c in 1usize..3, half in 1usize..4) {
        let x = volume(c, 2 * half, seed);
        let (y, idx) = maxpool3d_forward(&x).unwrap();
        prop_assert_eq!(y.dims(), [c, half, half, half]);
        let back = maxpool3d_backward(&VolumeTensor::filled(y.dims(), 1.0), &idx).unwrap();
        prop_assert_eq!(back.data().iter().sum::<f64>(), y.data().len() as f64);
        let mut picked: Vec<f64> = x.data().iter().zip(back.data()).filter(|(_, g)| **g != 0.0).map(|(v, _)| *v).collect();
        let mut maxima = y.data().to_vec();
        picked.sort_by(f64::total_cmp);
        maxima.sort_by(f64::total_cmp);
        prop_assert_eq!(picked, maxima);
    }
}
