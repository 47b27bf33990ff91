use std::path::{Path, PathBuf};

use anyhow::Context;
use breathgest::augment::augment_set;
use breathgest::breathnet::{load_weights, predict_timesteps_with_step, save_weights, train_from, BreathNet, History};
use breathgest::dataset::Dataset;
use breathgest::eval::{run_cv_with, CvMode, CvReport};
use breathgest::postproc::{eventize_with, save_events, save_trace, Finalized, StepClock, StreamBuffer, Strategies};
use breathgest::signal::{read_series, synth_session_with, SubjectProfile};
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::manifest::{Manifest, SubjectEntry};
use crate::{Command, Common};

/// A flag value clap cannot check by itself.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub const TRAIN_SUMMARY_FORMAT: &str = "breathgest-train";
pub const WEIGHTS_FILE: &str = "weights.bgnw";
pub const HISTORY_FILE: &str = "history.csv";

struct Ctx {
    config: RunConfig,
    out: PathBuf,
}

impl Ctx {
    fn new(common: &Common) -> anyhow::Result<Self> {
        let mut config = RunConfig::load(common.config.as_deref())?;
        if let Some(seed) = common.seed {
            config.seed = seed;
        }
        let out = common.out.clone().unwrap_or_else(|| config.paths.out.clone());
        Ok(Self { config, out })
    }

    fn data_dir(&self, flag: Option<PathBuf>) -> PathBuf {
        flag.unwrap_or_else(|| self.config.paths.data.clone())
    }
}

fn parse_strategies(flag: Option<&str>, config: &RunConfig) -> anyhow::Result<Strategies> {
    match flag {
        Some(s) => s.parse().map_err(|e: breathgest::Error| UsageError(e.to_string()).into()),
        None => config.strategies(),
    }
}

pub fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Gen { common } => {
            let ctx = Ctx::new(&common)?;
            gen(&ctx.config, &ctx.out)
        }
        Command::Augment { common, data } => {
            let ctx = Ctx::new(&common)?;
            augment(&ctx.config, &ctx.data_dir(data), &ctx.out)
        }
        Command::Train { common, data, resume } => {
            let ctx = Ctx::new(&common)?;
            train(&ctx.config, &ctx.data_dir(data), &ctx.out, resume)
        }
        Command::Eval { common, data, mode, strategies } => {
            let ctx = Ctx::new(&common)?;
            let mode = match mode {
                Some(m) => m.parse::<CvMode>().map_err(|_| UsageError(format!("unknown mode {m:?}")))?,
                None => ctx.config.eval.mode,
            };
            let strategies = parse_strategies(strategies.as_deref(), &ctx.config)?;
            eval(&ctx.config, &ctx.data_dir(data), &ctx.out, mode, strategies)
        }
        Command::Stream { common, weights, series, strategies } => {
            let ctx = Ctx::new(&common)?;
            let strategies = parse_strategies(strategies.as_deref(), &ctx.config)?;
            stream(&weights, &series, &ctx.out, strategies)
        }
        Command::Report { common, report } => {
            let path = if report.is_dir() { report.join("report.json") } else { report };
            let out = common.out.clone().unwrap_or_else(|| path.parent().map(Path::to_path_buf).unwrap_or_default());
            summarize(&path, &out)
        }
    }
}

fn gen(config: &RunConfig, out: &Path) -> anyhow::Result<()> {
    if config.data.subjects == 0 || config.data.trials == 0 || config.data.scenarios.is_empty() {
        return Err(UsageError("subjects, trials and scenarios must be non-empty".into()).into());
    }
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let subjects: Vec<SubjectEntry> = (0..config.data.subjects)
        .map(|i| {
            let id = RunConfig::subject_id(i);
            let seed = config.subject_seed(&id);
            SubjectEntry { profile: SubjectProfile::sample(id.clone(), seed), id, seed }
        })
        .collect();
    let mut manifest = Manifest::new(config, subjects.clone());
    for s in &subjects {
        for &scenario in &config.data.scenarios {
            let series = synth_session_with(&s.profile, scenario, config.data.trials, &config.noise)?;
            manifest.add_series(out, &format!("{}_{}", s.id, scenario.name()), &series)?;
        }
    }
    let manifest = manifest.save(out)?;
    println!("wrote {} series to {} (manifest {})", manifest.files.len(), out.display(), manifest.hash);
    Ok(())
}

fn augment(config: &RunConfig, data: &Path, out: &Path) -> anyhow::Result<()> {
    let source = Manifest::load(data)?;
    let series = source.read_all(data)?;
    let Some(aug) = config.augment_config() else {
        return Err(UsageError("augmentation is disabled in the configuration".into()).into());
    };
    let expanded = augment_set(&series, &aug)?;
    std::fs::create_dir_all(out)?;
    let mut manifest = Manifest::new(config, source.subjects.clone());
    let per_input = expanded.len() / series.len().max(1);
    for (i, s) in expanded.iter().enumerate() {
        let stem = source.files[i / per_input].path.file_stem().and_then(|s| s.to_str()).unwrap_or("series").to_owned();
        let variant = serde_json::to_value(&s.provenance)?.get("type").and_then(Value::as_str).unwrap_or("original").to_owned();
        manifest.add_series(out, &format!("{stem}.{variant}"), s)?;
    }
    let manifest = manifest.save(out)?;
    println!("wrote {} series ({}x) to {} (manifest {})", manifest.files.len(), per_input, out.display(), manifest.hash);
    Ok(())
}

fn train(config: &RunConfig, data: &Path, out: &Path, resume: bool) -> anyhow::Result<()> {
    let manifest = Manifest::load(data)?;
    let mut series = manifest.read_all(data)?;
    if let Some(aug) = config.augment_config() {
        series = augment_set(&series, &aug)?;
    }
    let dataset = Dataset::from_series(&series, config.model.window, config.train.window_step)?;
    drop(series);
    std::fs::create_dir_all(out)?;
    let weights_path = out.join(WEIGHTS_FILE);
    let history_path = out.join(HISTORY_FILE);
    let train_cfg = config.train_config();
    let (model, mut history) = if resume {
        let model = load_weights(&weights_path, Some(&config.model))
            .with_context(|| format!("resuming from {}", weights_path.display()))?;
        let history = History::read_csv(&history_path).unwrap_or_default();
        (model, history)
    } else {
        (BreathNet::new(config.model.clone(), breathgest::seed::derive(train_cfg.seed, 0))?, History::default())
    };
    eprintln!("training on {} windows, {} parameters", dataset.len(), model.params.count());
    let (model, new) = train_from(model, &dataset, &train_cfg, |r| {
        eprintln!("epoch {:>3}  train {:.5}  val {:.5}", r.epoch, r.train_loss, r.val_loss);
    })?;
    history.epochs.extend(new.epochs);
    save_weights(&model, &weights_path)?;
    history.write_csv(&history_path)?;
    let summary = json!({
        "format": TRAIN_SUMMARY_FORMAT,
        "version": 1,
        "seeds": config.seeds(),
        "data_manifest": manifest.hash,
        "windows": dataset.len(),
        "class_weights": dataset.class_weights,
        "epochs_run": model.meta.epochs_run,
        "best_epoch": model.meta.best_epoch,
        "best_val_loss": model.meta.best_val_loss,
    });
    std::fs::write(out.join("train.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    println!(
        "best epoch {} of {}, weights in {}",
        model.meta.best_epoch,
        model.meta.epochs_run,
        weights_path.display()
    );
    Ok(())
}

fn eval(config: &RunConfig, data: &Path, out: &Path, mode: CvMode, strategies: Strategies) -> anyhow::Result<()> {
    let manifest = Manifest::load(data)?;
    let series = manifest.read_all(data)?;
    let cv = config.cv_config(mode, strategies);
    let report = run_cv_with(&series, &cv, |f| {
        eprintln!(
            "fold {} ({}): time-step acc {:.4}, event macro F1 {:.4}, events {}/{}",
            f.fold, f.held_out, f.timestep.metrics.accuracy, f.event.metrics.macro_avg.f1, f.pred_events, f.truth_events
        );
    })?;
    report.save_all(out)?;
    print_summary(&report);
    Ok(())
}

fn print_summary(report: &CvReport) {
    println!("{} folds, strategies {}", report.folds.len(), report.strategies);
    for (name, level) in [("time-step", &report.timestep), ("event", &report.event)] {
        println!(
            "{name:>9}: accuracy {:.2} ± {:.2} %, macro F1 {:.2} ± {:.2} %, weighted F1 {:.2} ± {:.2} %",
            100.0 * level.mean.accuracy,
            100.0 * level.std.accuracy,
            100.0 * level.mean.macro_f1,
            100.0 * level.std.macro_f1,
            100.0 * level.mean.weighted_f1,
            100.0 * level.std.weighted_f1,
        );
    }
}

fn stream(weights: &Path, series_path: &Path, out: &Path, strategies: Strategies) -> anyhow::Result<()> {
    let model = load_weights(weights, None).with_context(|| format!("loading {}", weights.display()))?;
    let series = read_series(series_path).with_context(|| format!("reading {}", series_path.display()))?;
    let clock = StepClock { window: model.window(), ..StepClock::default() };
    let preds = predict_timesteps_with_step(&model, &series.samples, clock.step)?;

    let (trace, events) = if strategies == Strategies::NONE {
        let trace: Vec<Finalized> =
            preds.iter().enumerate().map(|(step, &p)| Finalized { step, raw: p, corrected: p }).collect();
        (trace, eventize_with(&preds, &clock))
    } else {
        let mut buf = StreamBuffer::with_clock(strategies, clock);
        let mut trace = Vec::with_capacity(preds.len());
        let mut events = Vec::new();
        for &p in &preds {
            let o = buf.push(p);
            trace.extend(o.finalized);
            events.extend(o.event);
        }
        let (rest, last) = buf.finish();
        trace.extend(rest);
        events.extend(last);
        (trace, events)
    };

    std::fs::create_dir_all(out)?;
    let mut extra = Map::new();
    extra.insert("subject".into(), series.subject_id.clone().into());
    extra.insert("scenario".into(), json!(series.scenario));
    extra.insert("strategies".into(), strategies.to_string().into());
    save_events(&out.join("events.jsonl"), &events, extra.clone())?;
    save_trace(&out.join("trace.jsonl"), &trace, &clock, extra)?;
    let truth = eventize_with(&breathgest::eval::step_labels(&series, &clock), &clock);
    println!("{} events ({} gesture spans in the series), {} steps", events.len(), truth.len(), trace.len());
    Ok(())
}

fn summarize(path: &Path, out: &Path) -> anyhow::Result<()> {
    let report = CvReport::load_json(path).with_context(|| format!("reading {}", path.display()))?;
    report.save_all(out)?;
    print_summary(&report);
    for f in &report.folds {
        println!(
            "  fold {} {:>8}: time-step acc {:.4}  event macro F1 {:.4}  events {}/{}",
            f.fold, f.held_out, f.timestep.metrics.accuracy, f.event.metrics.macro_avg.f1, f.pred_events, f.truth_events
        );
    }
    Ok(())
}
