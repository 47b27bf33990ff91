//! Confusion matrices, precision/recall/F1, event matching and
//! cross-validation.

mod cv;
mod matching;

pub use cv::{evaluate_series, run_cv, run_cv_with, step_labels, CvConfig, CvMode, CvReport, FoldReport, LevelReport, LevelSummary, SeriesEval};
pub use matching::match_events;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::GestureKind;

const K: usize = GestureKind::COUNT;

/// Counts indexed `[truth][prediction]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; K]; K],
}

impl ConfusionMatrix {
    pub fn add(&mut self, truth: GestureKind, pred: GestureKind) {
        self.counts[truth.index()][pred.index()] += 1;
    }

    pub fn get(&self, truth: GestureKind, pred: GestureKind) -> u64 {
        self.counts[truth.index()][pred.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..K).map(|i| self.counts[i][i]).sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().flatten().zip(other.counts.iter().flatten()) {
            *a += b;
        }
    }

    /// CSV grid with a header row of predicted classes and one row per truth
    /// class.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "# breathgest-confusion v1")?;
        write!(out, "truth\\pred")?;
        for k in GestureKind::ALL {
            write!(out, ",{}", k.name())?;
        }
        writeln!(out)?;
        for k in GestureKind::ALL {
            write!(out, "{}", k.name())?;
            for c in self.counts[k.index()] {
                write!(out, ",{c}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut out)?;
        out.flush()?;
        Ok(())
    }
}

/// Counts one entry per step.
pub fn score_timesteps(pred: &[GestureKind], truth: &[GestureKind]) -> Result<ConfusionMatrix> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch { left: pred.len(), right: truth.len() });
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in pred.iter().zip(truth) {
        cm.add(t, p);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub per_class: [ClassMetrics; K],
    /// Unweighted mean over classes with non-zero support.
    #[serde(rename = "macro")]
    pub macro_avg: Averages,
    /// Mean weighted by true-class support.
    pub weighted: Averages,
    pub accuracy: f64,
    pub total: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut per_class = [ClassMetrics::default(); K];
    for (c, m) in per_class.iter_mut().enumerate() {
        let tp = cm.counts[c][c];
        let support = cm.support(c);
        let precision = ratio(tp, cm.predicted(c));
        let recall = ratio(tp, support);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        *m = ClassMetrics { precision, recall, f1, support };
    }
    let present: Vec<&ClassMetrics> = per_class.iter().filter(|m| m.support > 0).collect();
    let n = present.len() as f64;
    let macro_avg = Averages {
        precision: present.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: present.iter().map(|m| m.recall).sum::<f64>() / n,
        f1: present.iter().map(|m| m.f1).sum::<f64>() / n,
    };
    let w = |f: fn(&ClassMetrics) -> f64| present.iter().map(|m| m.support as f64 * f(m)).sum::<f64>() / total as f64;
    let weighted = Averages { precision: w(|m| m.precision), recall: w(|m| m.recall), f1: w(|m| m.f1) };
    Ok(Metrics { per_class, macro_avg, weighted, accuracy: ratio(cm.trace(), total), total })
}
