use breathgest::augment::AugmentConfig;
use breathgest::breathnet::{ModelConfig, TrainConfig};
use breathgest::eval::{run_cv, step_labels, CvConfig, CvMode, CvReport};
use breathgest::postproc::{eventize, StepClock, Strategies};
use breathgest::signal::{synth_session, SubjectProfile};
use breathgest::{seed, Error, LabeledSeries, Scenario};

fn corpus(subjects: usize) -> Vec<LabeledSeries> {
    let mut out = Vec::new();
    for i in 0..subjects {
        let p = SubjectProfile::sample(format!("S{}", i + 1), seed::derive(3, i as u64));
        for sc in Scenario::ALL {
            out.push(synth_session(&p, sc, 1).unwrap());
        }
    }
    out
}

fn tiny(mode: CvMode, augment: bool) -> CvConfig {
    CvConfig {
        mode,
        model: ModelConfig { conv_channels: 4, heads: 2, linear1_out: 4, lstm_hidden: 4, linear2_out: 8, ..ModelConfig::default() },
        train: TrainConfig { lr: 1e-3, batch_size: 64, max_epochs: 1, patience: 1, seed: 4, val_fraction: 0.15 },
        augment: augment.then(AugmentConfig::default),
        train_step: 40,
        strategies: Strategies::ALL,
    }
}

#[test]
fn folds_follow_the_grouping_key() {
    let series = corpus(3);
    let lopo = run_cv(&series, &tiny(CvMode::Lopo, false)).unwrap();
    let held: Vec<_> = lopo.folds.iter().map(|f| f.held_out.as_str()).collect();
    assert_eq!(held, ["S1", "S2", "S3"]);
    let loso = run_cv(&series, &tiny(CvMode::Loso, false)).unwrap();
    assert_eq!(loso.folds.len(), 3);
    for f in lopo.folds.iter().chain(&loso.folds) {
        // One trial per gesture and three series per fold.
        assert_eq!(f.truth_events, 12);
        assert_eq!(f.timestep.confusion.total(), f.test_windows as u64);
    }
    assert_eq!(lopo.timestep.pooled.confusion.total(), loso.timestep.pooled.confusion.total());
}

#[test]
fn augmentation_only_touches_training_data() {
    let series = corpus(2);
    let plain = run_cv(&series, &tiny(CvMode::Lopo, false)).unwrap();
    let aug = run_cv(&series, &tiny(CvMode::Lopo, true)).unwrap();
    for (a, b) in plain.folds.iter().zip(&aug.folds) {
        assert_eq!(a.test_windows, b.test_windows);
        assert_eq!(a.truth_events, b.truth_events);
        assert_eq!(5 * a.train_windows, b.train_windows);
    }
}

#[test]
fn one_group_is_not_enough() {
    let series: Vec<_> = corpus(1);
    assert!(matches!(run_cv(&series, &tiny(CvMode::Lopo, false)), Err(Error::InsufficientFolds(1))));
    let sitting: Vec<_> = corpus(2).into_iter().filter(|s| s.scenario == Scenario::Sitting).collect();
    assert!(matches!(run_cv(&sitting, &tiny(CvMode::Loso, false)), Err(Error::InsufficientFolds(1))));
}

#[test]
fn report_round_trips() {
    let report = run_cv(&corpus(2), &tiny(CvMode::Lopo, false)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    report.save_all(dir.path()).unwrap();
    assert_eq!(CvReport::load_json(&dir.path().join("report.json")).unwrap(), report);
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "# breathgest-report v1");
    // Header, then two folds plus mean and std for each level.
    assert_eq!(lines.len(), 2 + 2 * 4);
    let grid = std::fs::read_to_string(dir.path().join("confusion_event.csv")).unwrap();
    assert_eq!(grid.lines().count(), 2 + 5);

    let mut tampered = report.clone();
    tampered.version = 99;
    tampered.save_json(&dir.path().join("old.json")).unwrap();
    assert!(matches!(CvReport::load_json(&dir.path().join("old.json")), Err(Error::FormatVersionMismatch { .. })));
}

#[test]
fn truth_steps_reproduce_the_spans() {
    let clock = StepClock::default();
    for s in corpus(2) {
        let events = eventize(&step_labels(&s, &clock));
        let spans: Vec<_> = s.spans.iter().map(|sp| sp.kind).collect();
        assert_eq!(events.iter().map(|e| e.kind).collect::<Vec<_>>(), spans);
        for (e, sp) in events.iter().zip(&s.spans) {
            let (a, b) = (clock.sample_index(e.start_step), clock.sample_index(e.end_step));
            assert!(a >= sp.start && b <= sp.end, "event {a}..{b} outside span {}..{}", sp.start, sp.end);
        }
    }
}
