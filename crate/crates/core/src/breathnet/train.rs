//! Mini-batch training with early stopping, and time-step prediction.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::model::{argmax, BreathNet, ModelConfig, Params};
use crate::dataset::{class_weights, window_count, Dataset, WINDOW_STEP};
use crate::error::{Error, Result};
use crate::seed;
use crate::signal::{GestureKind, Sample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Fraction of every class held out for validation.
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { lr: 5e-4, batch_size: 512, max_epochs: 100, patience: 30, seed: 0, val_fraction: 0.15 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::InvalidConfig("lr, batch_size and max_epochs must be positive".into()));
        }
        if self.patience == 0 || self.patience > self.max_epochs {
            return Err(Error::InvalidConfig("patience must be in 1..=max_epochs".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::InvalidConfig("val_fraction must be in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
}

pub const HISTORY_FORMAT: &str = "breathgest-history";
pub const HISTORY_VERSION: u32 = 1;

impl History {
    /// CSV with a `# breathgest-history v1` comment line, a column header and
    /// one row per epoch.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "# {HISTORY_FORMAT} v{HISTORY_VERSION}")?;
        writeln!(out, "epoch,train_loss,val_loss")?;
        for r in &self.epochs {
            writeln!(out, "{},{},{}", r.epoch, r.train_loss, r.val_loss)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let expected = format!("# {HISTORY_FORMAT} v{HISTORY_VERSION}");
        let first = lines.next().unwrap_or_default();
        if first != expected {
            return Err(Error::FormatVersionMismatch { expected, found: first.to_string() });
        }
        let bad = |line: &str| Error::Format(format!("bad history row {line:?}"));
        let mut epochs = Vec::new();
        for line in lines.skip(1).filter(|l| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(bad(line));
            }
            epochs.push(EpochRecord {
                epoch: cols[0].parse().map_err(|_| bad(line))?,
                train_loss: cols[1].parse().map_err(|_| bad(line))?,
                val_loss: cols[2].parse().map_err(|_| bad(line))?,
            });
        }
        Ok(Self { epochs })
    }
}

/// Per-class shuffled split: `round(val_fraction · n_c)` windows of each
/// class go to validation, keeping at least one in training.
pub fn stratified_split(labels: &[GestureKind], val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = seed::rng(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in GestureKind::ALL {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_val = ((idx.len() as f64 * val_fraction).round() as usize).min(idx.len().saturating_sub(1));
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Trains a fresh network.
pub fn train(dataset: &Dataset, model_cfg: &ModelConfig, cfg: &TrainConfig) -> Result<(BreathNet, History)> {
    let model = BreathNet::new(model_cfg.clone(), seed::derive(cfg.seed, 0))?;
    train_from(model, dataset, cfg, |_| {})
}

/// Continues training `model`; `on_epoch` sees every finished epoch.
pub fn train_from(
    mut model: BreathNet,
    dataset: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(BreathNet, History)> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let input_len = model.config.in_channels * model.config.window;
    if let Some(w) = dataset.windows.iter().find(|w| w.values.len() != input_len) {
        return Err(Error::ShapeMismatch(format!("window of {} values, model expects {input_len}", w.values.len())));
    }
    let labels: Vec<GestureKind> = dataset.labels().collect();
    let (mut train_idx, mut val_idx) = stratified_split(&labels, cfg.val_fraction, seed::derive(cfg.seed, 1));
    if val_idx.is_empty() {
        val_idx = train_idx.clone();
    }
    let weights = class_weights(train_idx.iter().map(|&i| labels[i]))?;
    let val_inputs: Vec<&[f64]> = val_idx.iter().map(|&i| dataset.windows[i].values.as_slice()).collect();
    let val_labels: Vec<GestureKind> = val_idx.iter().map(|&i| labels[i]).collect();

    let batch = cfg.batch_size.min(train_idx.len());
    let mut state = AdamState::new(&model.params);
    let mut grad = Params::zeros(&model.config);
    let mut shuffle_rng = seed::rng(seed::derive(cfg.seed, 2));
    let mut history = History::default();
    let start_epoch = model.meta.epochs_run;
    let mut best = (model.meta.best_val_loss.unwrap_or(f64::INFINITY), model.params.clone(), model.meta.best_epoch);
    let mut since_best = 0;

    for epoch in start_epoch + 1..=start_epoch + cfg.max_epochs {
        train_idx.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for chunk in train_idx.chunks(batch) {
            let inputs: Vec<&[f64]> = chunk.iter().map(|&i| dataset.windows[i].values.as_slice()).collect();
            let ys: Vec<GestureKind> = chunk.iter().map(|&i| labels[i]).collect();
            for t in grad.tensors_mut() {
                t.fill(0.0);
            }
            loss_sum += model.accumulate(&inputs, &ys, &weights, &mut grad);
            batches += 1;
            adam_step(&mut model.params, &grad, &mut state, cfg.lr);
        }
        let record = EpochRecord { epoch, train_loss: loss_sum / batches as f64, val_loss: model.loss(&val_inputs, &val_labels, &weights) };
        history.epochs.push(record);
        on_epoch(&record);
        model.meta.epochs_run = epoch;
        if record.val_loss < best.0 {
            best = (record.val_loss, model.params.clone(), epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    model.params = best.1;
    model.meta.best_val_loss = Some(best.0).filter(|v| v.is_finite());
    model.meta.best_epoch = best.2;
    Ok((model, history))
}

/// Argmax class of every window `(window, step 5)` over the samples; entry
/// `k` belongs to the window ending at sample `window − 1 + 5k`.
pub fn predict_timesteps(model: &BreathNet, samples: &[Sample]) -> Result<Vec<GestureKind>> {
    predict_timesteps_with_step(model, samples, WINDOW_STEP)
}

pub fn predict_timesteps_with_step(model: &BreathNet, samples: &[Sample], step: usize) -> Result<Vec<GestureKind>> {
    let size = model.window();
    if samples.len() < size {
        return Err(Error::SeriesTooShort { len: samples.len(), size });
    }
    let mut raw = vec![0.0; 2 * size];
    Ok((0..window_count(samples.len(), size, step))
        .map(|k| {
            let w = &samples[k * step..k * step + size];
            for (i, s) in w.iter().enumerate() {
                raw[i] = s.magnitude;
                raw[size + i] = s.phase;
            }
            let logits = model.forward_prepared(&model.prepare_input(&raw), None);
            GestureKind::from_code(argmax(&logits) as u8).expect("five classes")
        })
        .collect())
}
