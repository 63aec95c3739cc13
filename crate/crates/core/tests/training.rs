use qlstm_forecast::dataset::{
    fit_normalize, generate_synthetic, make_windows, split_chronological, Sample, SyntheticKind,
    WindowedDataset,
};
use qlstm_forecast::lstm::LstmParams;
use qlstm_forecast::qlstm::QlstmParams;
use qlstm_forecast::training::{
    adam_step, predict, predict_batched, train, AdamState, TrainConfig,
};
use qlstm_forecast::vqc::{Encoding, VqcDescriptor};
use qlstm_forecast::{ForecastError, Forecaster, Parameterized};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sine_splits() -> (WindowedDataset, WindowedDataset) {
    let raw = generate_synthetic(SyntheticKind::Sine, 200, 1, 0).unwrap();
    let (norm, _) = fit_normalize(&raw, 0.8).unwrap();
    split_chronological(&make_windows(&norm, 4).unwrap(), 0.8).unwrap()
}

#[test]
fn adam_on_a_quadratic_matches_direct_simulation() {
    let config = TrainConfig {
        learning_rate: 0.1,
        ..Default::default()
    };
    let (mut p, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
    let mut flat = vec![1.0];
    let mut state = AdamState::new(1);
    for t in 1..=100 {
        let g = 2.0 * p;
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        let m_hat = m / (1.0 - 0.9f64.powi(t));
        let v_hat = v / (1.0 - 0.999f64.powi(t));
        p -= 0.1 * m_hat / (v_hat.sqrt() + 1e-8);

        let (next, moments) = adam_step(&flat, &[2.0 * flat[0]], &state, &config).unwrap();
        flat = next;
        state = moments;
        assert!((flat[0] - p).abs() < 1e-14, "step {t}");
    }
    assert_eq!(state.t, 100);
    assert!(p.abs() < 0.1 && flat[0].abs() < 0.1, "{p}");
}

#[test]
fn adam_edge_cases() {
    let config = TrainConfig::default();
    let (p, s) = adam_step(&[0.3, -2.0], &[0.0, 0.0], &AdamState::new(2), &config).unwrap();
    assert_eq!(p, vec![0.3, -2.0]);
    assert_eq!((s.m, s.v, s.t), (vec![0.0; 2], vec![0.0; 2], 1));
    let (p, _) = adam_step(&[0.0], &[5.0], &AdamState::new(1), &config).unwrap();
    assert!((p[0] + 0.01).abs() < 1e-10);
    assert!(matches!(
        adam_step(&[0.0], &[1.0, 2.0], &AdamState::new(1), &config),
        Err(ForecastError::Shape(_))
    ));
}

#[test]
fn zero_epochs_leave_the_model_unchanged() {
    let (tr, te) = sine_splits();
    let model = LstmParams::init(1, 3, &mut ChaCha8Rng::seed_from_u64(1));
    let (trained, history) = train(
        &model,
        &tr,
        &te,
        &TrainConfig {
            epochs: 0,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(trained, model);
    assert!(history.records.is_empty());
}

#[test]
fn empty_train_split_is_rejected() {
    let (tr, te) = sine_splits();
    let empty = tr.with_samples(Vec::new());
    let model = LstmParams::init(1, 2, &mut ChaCha8Rng::seed_from_u64(1));
    assert!(matches!(
        train(&model, &empty, &te, &TrainConfig::default()),
        Err(ForecastError::EmptyInput(_))
    ));
}

#[test]
fn head_only_training_learns_a_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let samples: Vec<Sample> = (0..64)
        .map(|k| Sample {
            window: (0..4).map(|_| vec![rng.gen_range(0.0..1.0)]).collect(),
            target: 0.37,
            timestamp: qlstm_forecast::dataset::SYNTHETIC_START + chrono::Duration::days(k),
        })
        .collect();
    let data = WindowedDataset {
        lookback: 4,
        n_features: 1,
        samples,
    };
    let model = LstmParams::zeros(1, 3);
    let frozen = ["w_i", "w_f", "w_c", "w_o", "b_i", "b_f", "b_c", "b_o"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let config = TrainConfig {
        epochs: 200,
        frozen,
        ..Default::default()
    };
    let empty = data.with_samples(Vec::new());
    let (trained, history) = train(&model, &data, &empty, &config).unwrap();
    let last = history.last().unwrap().metrics;
    assert!(last.train_mse < 1e-6, "{}", last.train_mse);
    assert_eq!(last.test_mse, None);
    assert_eq!(trained.w_c, model.w_c);
    assert!((trained.head_b - 0.37).abs() < 1e-3);
}

#[test]
fn unknown_frozen_group_is_rejected() {
    let (tr, te) = sine_splits();
    let model = LstmParams::zeros(1, 2);
    let config = TrainConfig {
        frozen: vec!["nope".into()],
        ..Default::default()
    };
    assert!(train(&model, &tr, &te, &config).is_err());
}

#[test]
fn history_integrity_and_determinism() {
    let (tr, te) = sine_splits();
    let d = VqcDescriptor::new(4, 1, Encoding::AngleArctan).unwrap();
    let model = QlstmParams::init(d, 1, 2, &mut ChaCha8Rng::seed_from_u64(3));
    let tr = tr.with_samples(tr.samples[..40].to_vec());
    let config = TrainConfig {
        epochs: 3,
        shuffle: true,
        seed: 9,
        ..Default::default()
    };
    let (a, ha) = train(&model, &tr, &te, &config).unwrap();
    let (b, hb) = train(&model, &tr, &te, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(ha, hb);
    assert_eq!(ha.records.len(), 3);
    for (k, r) in ha.records.iter().enumerate() {
        assert_eq!(r.epoch, k + 1);
        let m = r.metrics;
        for x in [
            m.train_mse,
            m.train_mae,
            m.test_mse.unwrap(),
            m.test_mae.unwrap(),
        ] {
            assert!(x.is_finite() && x >= 0.0);
        }
    }
}

#[test]
fn prediction_is_pure_and_batch_invariant() {
    let (tr, _) = sine_splits();
    let model = LstmParams::init(1, 4, &mut ChaCha8Rng::seed_from_u64(4));
    let one = predict_batched(&model, &tr, 1).unwrap();
    let sixteen = predict_batched(&model, &tr, 16).unwrap();
    assert_eq!(one.len(), tr.len());
    for (a, b) in one.iter().zip(&sixteen) {
        assert!((a - b).abs() <= 1e-14);
    }
    assert_eq!(predict(&model, &tr).unwrap(), one);
    assert_eq!(one[0], model.predict(&tr.samples[0].window).unwrap());
    assert!(predict(&model, &tr.with_samples(Vec::new()))
        .unwrap()
        .is_empty());

    let wide = LstmParams::init(2, 4, &mut ChaCha8Rng::seed_from_u64(4));
    assert!(matches!(predict(&wide, &tr), Err(ForecastError::Shape(_))));
}

#[test]
fn divergence_names_the_epoch() {
    let (tr, te) = sine_splits();
    let mut model = LstmParams::init(1, 2, &mut ChaCha8Rng::seed_from_u64(5));
    model.head_b = 1e300;
    let config = TrainConfig {
        epochs: 2,
        ..Default::default()
    };
    match train(&model, &tr, &te, &config) {
        Err(ForecastError::Numeric(msg)) => assert!(msg.contains("epoch"), "{msg}"),
        other => panic!("expected a numeric error, got {other:?}"),
    }
}

#[test]
fn lstm_fits_the_sine_task() {
    // The QLSTM counterpart runs in the CLI acceptance suite.
    let (tr, te) = sine_splits();
    let model = LstmParams::init(1, 4, &mut ChaCha8Rng::seed_from_u64(0));
    let config = TrainConfig {
        epochs: 200,
        ..Default::default()
    };
    let (trained, history) = train(&model, &tr, &te, &config).unwrap();
    let initial = history.initial.unwrap().train_mse;
    let last = history.last().unwrap().metrics.train_mse;
    assert!(last < 0.01 && last <= initial / 5.0, "{initial} -> {last}");
    assert_eq!(trained.n_params(), model.n_params());
}
