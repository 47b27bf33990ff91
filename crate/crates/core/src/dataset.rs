//! Sliding windows, class weights, leave-one-out splits and dataset files.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::format::{JsonlReader, JsonlWriter};
use crate::signal::{GestureKind, LabeledSeries, Scenario};

pub const WINDOW_SIZE: usize = 100;
pub const WINDOW_STEP: usize = 5;
pub const CHANNELS: usize = 2;

pub const DATASET_FORMAT: &str = "breathgest-dataset";
pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Classifier input: magnitude and phase over `size` consecutive samples,
/// labeled with the class of its last sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    /// Channel-major, `[magnitude[0..size], phase[0..size]]`.
    pub values: Vec<f64>,
    pub label: GestureKind,
    pub subject_id: String,
    pub scenario: Scenario,
    /// Index of the last sample in the source series.
    pub end_index: usize,
}

impl Window {
    pub fn size(&self) -> usize {
        self.values.len() / CHANNELS
    }

    pub fn magnitude(&self) -> &[f64] {
        &self.values[..self.size()]
    }

    pub fn phase(&self) -> &[f64] {
        &self.values[self.size()..]
    }
}

/// `floor((len - size) / step) + 1`, or 0 when the series is too short.
pub fn window_count(len: usize, size: usize, step: usize) -> usize {
    if len < size || step == 0 {
        0
    } else {
        (len - size) / step + 1
    }
}

/// Windows at offsets `0, step, 2·step, …`.
pub fn slide_windows(series: &LabeledSeries, size: usize, step: usize) -> Result<Vec<Window>> {
    if step == 0 || size == 0 {
        return Err(Error::InvalidConfig("window size and step must be positive".into()));
    }
    if series.len() < size {
        return Err(Error::SeriesTooShort { len: series.len(), size });
    }
    Ok((0..window_count(series.len(), size, step))
        .map(|w| {
            let start = w * step;
            let slice = &series.samples[start..start + size];
            let mut values = Vec::with_capacity(CHANNELS * size);
            values.extend(slice.iter().map(|s| s.magnitude));
            values.extend(slice.iter().map(|s| s.phase));
            let end_index = start + size - 1;
            Window {
                values,
                label: series.labels[end_index],
                subject_id: series.subject_id.clone(),
                scenario: series.scenario,
                end_index,
            }
        })
        .collect())
}

pub fn class_counts(labels: impl IntoIterator<Item = GestureKind>) -> [usize; GestureKind::COUNT] {
    let mut counts = [0; GestureKind::COUNT];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}

/// Inverse-frequency weights `N / (K · n_c)` over the `K` classes present;
/// absent classes get 0.
pub fn class_weights(labels: impl IntoIterator<Item = GestureKind>) -> Result<[f64; GestureKind::COUNT]> {
    let counts = class_counts(labels);
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyLabels);
    }
    let present = counts.iter().filter(|&&n| n > 0).count() as f64;
    Ok(counts.map(|n| if n == 0 { 0.0 } else { total as f64 / (present * n as f64) }))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub windows: Vec<Window>,
    pub class_weights: [f64; GestureKind::COUNT],
}

impl Dataset {
    /// Wraps `windows`, computing class weights from their labels.
    pub fn new(windows: Vec<Window>) -> Self {
        let class_weights = class_weights(windows.iter().map(|w| w.label)).unwrap_or([0.0; GestureKind::COUNT]);
        Self { windows, class_weights }
    }

    /// Windows of every series with the given size and step.
    pub fn from_series<'a>(series: impl IntoIterator<Item = &'a LabeledSeries>, size: usize, step: usize) -> Result<Self> {
        let mut windows = Vec::new();
        for s in series {
            windows.extend(slide_windows(s, size, step)?);
        }
        Ok(Self::new(windows))
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = GestureKind> + '_ {
        self.windows.iter().map(|w| w.label)
    }

    pub fn subjects(&self) -> BTreeSet<&str> {
        self.windows.iter().map(|w| w.subject_id.as_str()).collect()
    }

    pub fn scenarios(&self) -> BTreeSet<Scenario> {
        self.windows.iter().map(|w| w.scenario).collect()
    }
}

/// Key of the held-out fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HoldOut {
    Subject(String),
    Scenario(Scenario),
}

impl HoldOut {
    pub fn matches(&self, subject_id: &str, scenario: Scenario) -> bool {
        match self {
            HoldOut::Subject(s) => s == subject_id,
            HoldOut::Scenario(sc) => *sc == scenario,
        }
    }
}

impl std::fmt::Display for HoldOut {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HoldOut::Subject(s) => write!(f, "subject {s}"),
            HoldOut::Scenario(sc) => write!(f, "scenario {}", sc.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub held_out: HoldOut,
}

fn split_by(windows: &[Window], key: HoldOut) -> Result<Split> {
    let (test, train): (Vec<_>, Vec<_>) = windows.iter().cloned().partition(|w| key.matches(&w.subject_id, w.scenario));
    if test.is_empty() {
        return Err(Error::UnknownKey(key.to_string()));
    }
    Ok(Split { train: Dataset::new(train), test: Dataset::new(test), held_out: key })
}

/// Leave one person out.
pub fn split_lopo(windows: &[Window], subject: &str) -> Result<Split> {
    split_by(windows, HoldOut::Subject(subject.to_string()))
}

/// Leave one scenario out.
pub fn split_loso(windows: &[Window], scenario: Scenario) -> Result<Split> {
    split_by(windows, HoldOut::Scenario(scenario))
}

/// Provenance stored in the dataset header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub generator: String,
    pub seed: u64,
}

impl Default for DatasetHeader {
    fn default() -> Self {
        Self { generator: concat!("breathgest ", env!("CARGO_PKG_VERSION")).to_string(), seed: 0 }
    }
}

/// Writes a JSON-Lines dataset: a header
/// `{"format":"breathgest-dataset","version":1,"generator":..,"seed":..,"windows":N,"class_weights":[..]}`
/// followed by one window per line.
pub fn save_dataset(dataset: &Dataset, header: &DatasetHeader, path: &Path) -> Result<()> {
    let mut extra = Map::new();
    extra.insert("generator".into(), Value::from(header.generator.clone()));
    extra.insert("seed".into(), Value::from(header.seed));
    extra.insert("windows".into(), Value::from(dataset.len()));
    extra.insert("class_weights".into(), serde_json::to_value(dataset.class_weights)?);
    let mut w = JsonlWriter::create(path, DATASET_FORMAT, DATASET_FORMAT_VERSION, extra)?;
    for window in &dataset.windows {
        w.record(window)?;
    }
    w.finish()
}

pub fn load_dataset(path: &Path) -> Result<(Dataset, DatasetHeader)> {
    let reader = JsonlReader::open(path, DATASET_FORMAT, DATASET_FORMAT_VERSION)?;
    let header = DatasetHeader {
        generator: reader.header.get("generator").and_then(Value::as_str).unwrap_or_default().to_string(),
        seed: reader.header.get("seed").and_then(Value::as_u64).unwrap_or_default(),
    };
    let expected = reader.header.get("windows").and_then(Value::as_u64);
    let class_weights = reader
        .header
        .get("class_weights")
        .cloned()
        .map(serde_json::from_value::<[f64; GestureKind::COUNT]>)
        .transpose()?;
    let windows: Vec<Window> = reader.records()?;
    if let Some(n) = expected {
        if n != windows.len() as u64 {
            return Err(Error::Format(format!("header announces {n} windows, file holds {}", windows.len())));
        }
    }
    let mut dataset = Dataset::new(windows);
    if let Some(w) = class_weights {
        dataset.class_weights = w;
    }
    Ok((dataset, header))
}
