use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};

use super::{match_events, metrics, score_timesteps, ConfusionMatrix, Metrics};
use crate::augment::{augment_set, AugmentConfig};
use crate::breathnet::{predict_timesteps_with_step, train, BreathNet, ModelConfig, TrainConfig};
use crate::dataset::{window_count, Dataset, WINDOW_STEP};
use crate::error::{Error, Result};
use crate::postproc::{eventize_with, optimize, GestureEvent, StepClock, Strategies};
use crate::seed;
use crate::signal::{GestureKind, LabeledSeries};

pub const REPORT_FORMAT: &str = "breathgest-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CvMode {
    /// Leave one person out.
    Lopo,
    /// Leave one scenario out.
    Loso,
}

impl std::str::FromStr for CvMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lopo" => Ok(CvMode::Lopo),
            "loso" => Ok(CvMode::Loso),
            _ => Err(Error::UnknownKey(s.to_string())),
        }
    }
}

impl CvMode {
    fn key(self, s: &LabeledSeries) -> String {
        match self {
            CvMode::Lopo => s.subject_id.clone(),
            CvMode::Loso => s.scenario.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvConfig {
    pub mode: CvMode,
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Applied to the training series of every fold; `None` trains on the
    /// originals only.
    pub augment: Option<AugmentConfig>,
    /// Window stride used to build the training set.
    pub train_step: usize,
    pub strategies: Strategies,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            mode: CvMode::Lopo,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            augment: Some(AugmentConfig::default()),
            train_step: WINDOW_STEP,
            strategies: Strategies::ALL,
        }
    }
}

/// Truth label of every time step: the label of the last sample of its
/// window.
pub fn step_labels(series: &LabeledSeries, clock: &StepClock) -> Vec<GestureKind> {
    (0..window_count(series.len(), clock.window, clock.step)).map(|k| series.labels[clock.sample_index(k)]).collect()
}

/// Predictions and scores of one test series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesEval {
    pub raw: Vec<GestureKind>,
    pub optimized: Vec<GestureKind>,
    pub truth: Vec<GestureKind>,
    pub pred_events: Vec<GestureEvent>,
    pub truth_events: Vec<GestureEvent>,
    pub timestep: ConfusionMatrix,
    pub event: ConfusionMatrix,
}

pub fn evaluate_series(model: &BreathNet, series: &LabeledSeries, strategies: Strategies) -> Result<SeriesEval> {
    let clock = StepClock { window: model.window(), ..StepClock::default() };
    let raw = predict_timesteps_with_step(model, &series.samples, clock.step)?;
    let optimized = optimize(&raw, strategies);
    let truth = step_labels(series, &clock);
    let pred_events = eventize_with(&optimized, &clock);
    let truth_events = eventize_with(&truth, &clock);
    Ok(SeriesEval {
        timestep: score_timesteps(&optimized, &truth)?,
        event: match_events(&pred_events, &truth_events),
        raw,
        optimized,
        truth,
        pred_events,
        truth_events,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

impl LevelReport {
    fn new(confusion: ConfusionMatrix) -> Result<Self> {
        Ok(Self { metrics: metrics(&confusion)?, confusion })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub held_out: String,
    pub train_windows: usize,
    pub test_windows: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub truth_events: usize,
    pub pred_events: usize,
    pub timestep: LevelReport,
    pub event: LevelReport,
}

/// Headline numbers of one level.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Headline {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
}

impl Headline {
    fn of(m: &Metrics) -> Self {
        Self {
            accuracy: m.accuracy,
            macro_precision: m.macro_avg.precision,
            macro_recall: m.macro_avg.recall,
            macro_f1: m.macro_avg.f1,
            weighted_precision: m.weighted.precision,
            weighted_recall: m.weighted.recall,
            weighted_f1: m.weighted.f1,
        }
    }

    fn values(&self) -> [f64; 7] {
        [
            self.accuracy,
            self.macro_precision,
            self.macro_recall,
            self.macro_f1,
            self.weighted_precision,
            self.weighted_recall,
            self.weighted_f1,
        ]
    }

    fn from_values(v: [f64; 7]) -> Self {
        Self {
            accuracy: v[0],
            macro_precision: v[1],
            macro_recall: v[2],
            macro_f1: v[3],
            weighted_precision: v[4],
            weighted_recall: v[5],
            weighted_f1: v[6],
        }
    }

    const COLUMNS: &'static str =
        "accuracy,macro_precision,macro_recall,macro_f1,weighted_precision,weighted_recall,weighted_f1";
}

/// Mean and population standard deviation across folds, plus the pooled
/// confusion matrix of all folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub mean: Headline,
    pub std: Headline,
    pub pooled: LevelReport,
}

impl LevelSummary {
    fn new(folds: &[&LevelReport]) -> Result<Self> {
        let n = folds.len() as f64;
        let rows: Vec<[f64; 7]> = folds.iter().map(|f| Headline::of(&f.metrics).values()).collect();
        let mut mean = [0.0; 7];
        let mut std = [0.0; 7];
        for j in 0..7 {
            mean[j] = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            std[j] = (rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt();
        }
        let mut pooled = ConfusionMatrix::default();
        for f in folds {
            pooled.merge(&f.confusion);
        }
        Ok(Self { mean: Headline::from_values(mean), std: Headline::from_values(std), pooled: LevelReport::new(pooled)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub format: String,
    pub version: u32,
    pub mode: CvMode,
    pub strategies: Strategies,
    pub folds: Vec<FoldReport>,
    pub timestep: LevelSummary,
    pub event: LevelSummary,
}

impl CvReport {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let report: CvReport = serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
        if report.format != REPORT_FORMAT || report.version != REPORT_VERSION {
            return Err(Error::FormatVersionMismatch {
                expected: format!("{REPORT_FORMAT} v{REPORT_VERSION}"),
                found: format!("{} v{}", report.format, report.version),
            });
        }
        Ok(report)
    }

    /// One row per fold and level, then `mean` and `std` rows.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "# {REPORT_FORMAT} v{REPORT_VERSION}")?;
        writeln!(out, "level,fold,held_out,{}", Headline::COLUMNS)?;
        fn row(out: &mut impl Write, level: &str, fold: &str, held: &str, h: &Headline) -> std::io::Result<()> {
            let vals: Vec<String> = h.values().iter().map(|v| v.to_string()).collect();
            writeln!(out, "{level},{fold},{held},{}", vals.join(","))
        }
        for (level, summary) in [("timestep", &self.timestep), ("event", &self.event)] {
            for f in &self.folds {
                let lr = if level == "timestep" { &f.timestep } else { &f.event };
                row(&mut out, level, &f.fold.to_string(), &f.held_out, &Headline::of(&lr.metrics))?;
            }
            row(&mut out, level, "mean", "", &summary.mean)?;
            row(&mut out, level, "std", "", &summary.std)?;
        }
        Ok(())
    }

    /// Writes `report.json`, `report.csv` and pooled confusion grids into
    /// `dir`.
    pub fn save_all(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.save_json(&dir.join("report.json"))?;
        let mut csv = std::io::BufWriter::new(std::fs::File::create(dir.join("report.csv"))?);
        self.write_csv(&mut csv)?;
        csv.flush()?;
        self.timestep.pooled.confusion.save_csv(&dir.join("confusion_timestep.csv"))?;
        self.event.pooled.confusion.save_csv(&dir.join("confusion_event.csv"))?;
        Ok(())
    }
}

pub fn run_cv(series: &[LabeledSeries], cfg: &CvConfig) -> Result<CvReport> {
    run_cv_with(series, cfg, |_| {})
}

/// Cross-validation over whole series grouped by subject or scenario. Folds
/// run in parallel up to the available cores; `on_fold` sees each fold as it
/// finishes and the report lists them in key order.
pub fn run_cv_with(series: &[LabeledSeries], cfg: &CvConfig, mut on_fold: impl FnMut(&FoldReport)) -> Result<CvReport> {
    if cfg.train_step == 0 {
        return Err(Error::InvalidConfig("train_step must be positive".into()));
    }
    cfg.model.validate()?;
    cfg.train.validate()?;
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, s) in series.iter().enumerate() {
        groups.entry(cfg.mode.key(s)).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(Error::InsufficientFolds(groups.len()));
    }
    let groups: Vec<(String, Vec<usize>)> = groups.into_iter().collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(groups.len());
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    let mut slots: Vec<Option<FoldReport>> = vec![None; groups.len()];
    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, groups) = (&next, &groups);
            scope.spawn(move || loop {
                let fold = next.fetch_add(1, Ordering::Relaxed);
                let Some((held_out, test_idx)) = groups.get(fold) else { break };
                let result = run_fold(series, cfg, fold, held_out, test_idx);
                let failed = result.is_err();
                if tx.send((fold, result)).is_err() || failed {
                    break;
                }
            });
        }
        drop(tx);
        for (fold, result) in rx {
            let report = match result {
                Ok(r) => r,
                Err(e) => {
                    // Remaining workers stop after their current fold.
                    next.store(usize::MAX, Ordering::Relaxed);
                    return Err(e);
                }
            };
            on_fold(&report);
            slots[fold] = Some(report);
        }
        Ok(())
    })?;
    let folds: Vec<FoldReport> = slots.into_iter().map(|f| f.expect("every fold reported")).collect();
    let timestep = LevelSummary::new(&folds.iter().map(|f| &f.timestep).collect::<Vec<_>>())?;
    let event = LevelSummary::new(&folds.iter().map(|f| &f.event).collect::<Vec<_>>())?;
    Ok(CvReport {
        format: REPORT_FORMAT.to_string(),
        version: REPORT_VERSION,
        mode: cfg.mode,
        strategies: cfg.strategies,
        folds,
        timestep,
        event,
    })
}

/// Trains on everything outside `test_idx` and scores the held-out series.
fn run_fold(series: &[LabeledSeries], cfg: &CvConfig, fold: usize, held_out: &str, test_idx: &[usize]) -> Result<FoldReport> {
    let train_series: Vec<LabeledSeries> =
        series.iter().enumerate().filter(|(i, _)| !test_idx.contains(i)).map(|(_, s)| s.clone()).collect();
    let train_series = match &cfg.augment {
        Some(aug) => augment_set(&train_series, &AugmentConfig { seed: seed::derive(aug.seed, fold as u64), ..*aug })?,
        None => train_series,
    };
    let dataset = Dataset::from_series(&train_series, cfg.model.window, cfg.train_step)?;
    drop(train_series);
    let train_cfg = TrainConfig { seed: seed::derive(cfg.train.seed, fold as u64), ..cfg.train.clone() };
    let (model, _) = train(&dataset, &cfg.model, &train_cfg)?;

    let mut ts = ConfusionMatrix::default();
    let mut ev = ConfusionMatrix::default();
    let (mut test_windows, mut truth_events, mut pred_events) = (0, 0, 0);
    for &i in test_idx {
        let e = evaluate_series(&model, &series[i], cfg.strategies)?;
        ts.merge(&e.timestep);
        ev.merge(&e.event);
        test_windows += e.raw.len();
        truth_events += e.truth_events.len();
        pred_events += e.pred_events.len();
    }
    Ok(FoldReport {
        fold,
        held_out: held_out.to_string(),
        train_windows: dataset.len(),
        test_windows,
        epochs_run: model.meta.epochs_run,
        best_epoch: model.meta.best_epoch,
        truth_events,
        pred_events,
        timestep: LevelReport::new(ts)?,
        event: LevelReport::new(ev)?,
    })
}
