use breathgest::breathnet::{
    argmax, decode_weights, encode_weights, load_weights, predict_timesteps, save_weights, softmax, train, BreathNet,
    ModelConfig, Tensor, TrainConfig,
};
use breathgest::dataset::{window_count, Dataset, Window};
use breathgest::signal::{synth_session, Sample, Scenario, SubjectProfile};
use breathgest::{Error, GestureKind};

fn small_config() -> ModelConfig {
    ModelConfig { conv_channels: 8, heads: 2, linear1_out: 8, lstm_hidden: 6, linear2_out: 8, ..ModelConfig::default() }
}

#[test]
fn published_shape_chain() {
    let cfg = ModelConfig::default();
    assert_eq!(cfg.conv_lengths(), vec![100, 98, 48, 46, 22]);
    assert_eq!(cfg.seq_len(), 22);
    assert_eq!(cfg.flatten_width(), 2200);
    assert_eq!(cfg.conv_channels / cfg.heads, 5);
    let model = BreathNet::new(cfg, 0).unwrap();
    assert_eq!(model.params.linear2.weight.shape(), &[100, 2200]);
    assert_eq!(model.params.linear3.weight.shape(), &[5, 100]);
    assert_eq!(model.params.lstm.w_ih.shape(), &[400, 100]);
    let logits = model.forward(&Tensor::zeros(&[1, 2, 100])).unwrap();
    assert_eq!(logits.shape(), &[1, 5]);
    assert!(logits.data().iter().all(|v| v.is_finite()));
}

#[test]
fn batch_rows_are_independent() {
    let model = BreathNet::new(small_config(), 3).unwrap();
    let row: Vec<f64> = (0..200).map(|i| 500.0 + (i as f64 * 0.2).sin() * 10.0).collect();
    let other: Vec<f64> = (0..200).map(|i| 480.0 + (i as f64 * 0.05).cos() * 20.0).collect();
    let batch = Tensor::from_vec(&[3, 2, 100], [row.clone(), other, row].concat()).unwrap();
    let logits = model.forward(&batch).unwrap();
    assert_eq!(logits.row(0), logits.row(2));
    assert_ne!(logits.row(0), logits.row(1));
}

#[test]
fn wrong_input_shape() {
    let model = BreathNet::new(small_config(), 3).unwrap();
    assert!(matches!(model.forward(&Tensor::zeros(&[1, 2, 99])), Err(Error::ShapeMismatch(_))));
    assert!(matches!(model.forward(&Tensor::zeros(&[1, 3, 100])), Err(Error::ShapeMismatch(_))));
    assert!(matches!(model.logits(&[0.0; 10]), Err(Error::ShapeMismatch(_))));
}

#[test]
fn invalid_configs_rejected() {
    assert!(BreathNet::new(ModelConfig { heads: 7, ..ModelConfig::default() }, 0).is_err());
    assert!(BreathNet::new(ModelConfig { window: 8, ..ModelConfig::default() }, 0).is_err());
}

#[test]
fn softmax_and_argmax_properties() {
    let z = [0.3, -2.0, 4.0, 3.9, 0.0];
    let p = softmax(&z);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let shifted: Vec<f64> = z.iter().map(|v| v + 123.4).collect();
    assert_eq!(argmax(&z), argmax(&shifted));
    assert_eq!(argmax(&z), 2);
}

#[test]
fn weights_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    let mut model = BreathNet::new(small_config(), 9).unwrap();
    model.meta.epochs_run = 4;
    model.meta.best_val_loss = Some(0.25);
    save_weights(&model, &path).unwrap();
    let back = load_weights(&path, Some(&small_config())).unwrap();
    assert_eq!(back, model);

    let other = ModelConfig { lstm_hidden: 7, ..small_config() };
    assert!(matches!(load_weights(&path, Some(&other)), Err(Error::ConfigMismatch(_))));

    let bytes = encode_weights(&model).unwrap();
    for cut in [0, 3, 8, 20, bytes.len() / 2, bytes.len() - 1] {
        let err = decode_weights(&bytes[..cut], None).unwrap_err();
        assert!(matches!(err, Error::FormatVersionMismatch { .. } | Error::Io(_)), "cut {cut}: {err:?}");
    }
    let mut wrong = bytes.clone();
    wrong[4] = 7;
    assert!(matches!(decode_weights(&wrong, None), Err(Error::FormatVersionMismatch { .. })));
}

/// 50 noiseless windows: a flat baseline (null) or one hump (single click).
fn toy_dataset() -> Dataset {
    let mut windows = Vec::new();
    for i in 0..50 {
        let label = if i % 2 == 0 { GestureKind::Null } else { GestureKind::SingleClick };
        let amp = if label.is_null() { 0.0 } else { 20.0 };
        let mut values: Vec<f64> =
            (0..100).map(|t| 500.0 + amp * (std::f64::consts::PI * t as f64 / 100.0).sin() + (i as f64 * 0.1)).collect();
        values.extend((0..100).map(|t| -12.0 + 0.2 * amp * (std::f64::consts::PI * t as f64 / 100.0).sin()));
        windows.push(Window { values, label, subject_id: "S".into(), scenario: Scenario::Sitting, end_index: 99 + i });
    }
    Dataset::new(windows)
}

#[test]
fn training_reduces_loss_and_is_deterministic() {
    let data = toy_dataset();
    let cfg = TrainConfig { lr: 3e-3, batch_size: 16, max_epochs: 15, patience: 15, seed: 4, val_fraction: 0.2 };
    let (model, history) = train(&data, &small_config(), &cfg).unwrap();
    let first = history.epochs[0].train_loss;
    let best = history.epochs[model.meta.best_epoch - 1].train_loss;
    assert!(best < first, "{first} -> {best}");
    let (again, history_again) = train(&data, &small_config(), &cfg).unwrap();
    assert_eq!(model, again);
    assert_eq!(history, history_again);
}

#[test]
fn early_stopping_with_patience_one() {
    let data = toy_dataset();
    let cfg = TrainConfig { lr: 0.05, batch_size: 50, max_epochs: 40, patience: 1, seed: 1, val_fraction: 0.2 };
    let (model, history) = train(&data, &small_config(), &cfg).unwrap();
    assert!(model.meta.epochs_run < 40);
    assert_eq!(history.epochs.len(), model.meta.epochs_run);
}

#[test]
fn empty_dataset_rejected() {
    assert!(matches!(train(&Dataset::default(), &small_config(), &TrainConfig::default()), Err(Error::EmptyDataset)));
}

#[test]
fn timestep_output_length() {
    let model = BreathNet::new(small_config(), 1).unwrap();
    for len in [100, 104, 105, 333] {
        let samples: Vec<Sample> = (0..len).map(|k| Sample { t: k as f64 / 20.0, magnitude: 500.0, phase: -12.0 }).collect();
        assert_eq!(predict_timesteps(&model, &samples).unwrap().len(), window_count(len, 100, 5));
    }
    let short = vec![Sample { t: 0.0, magnitude: 1.0, phase: 0.0 }; 99];
    assert!(matches!(predict_timesteps(&model, &short), Err(Error::SeriesTooShort { .. })));
}

#[test]
fn trained_model_keeps_regular_breathing_null() {
    // Train on a short noiseless session, then feed pure regular breathing.
    let profile = SubjectProfile::default();
    let series = synth_session(&profile, Scenario::Lying, 2).unwrap();
    let data = Dataset::from_series([&series], 100, 5).unwrap();
    let cfg = TrainConfig { lr: 2e-3, batch_size: 32, max_epochs: 12, patience: 12, seed: 0, val_fraction: 0.15 };
    let (model, _) = train(&data, &small_config(), &cfg).unwrap();
    let regular = breathgest::signal::synth_breath(breathgest::signal::BreathKind::Regular, &profile);
    let samples: Vec<Sample> = regular
        .samples
        .iter()
        .cycle()
        .take(800)
        .enumerate()
        .map(|(k, s)| Sample { t: k as f64 / 20.0, ..*s })
        .collect();
    let preds = predict_timesteps(&model, &samples).unwrap();
    let null = preds.iter().filter(|p| p.is_null()).count() as f64 / preds.len() as f64;
    assert!(null >= 0.95, "null share {null}");
}
