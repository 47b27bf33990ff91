//! Series files.
//!
//! `<name>.jsonl` starts with a header
//! `{"format":"breathgest-series","version":1,"subject":..,"scenario":..,"provenance":{..}}`
//! followed by one record per sample:
//! `{"subject":"S01","scenario":"sitting","t":0.05,"magnitude":512.3,"phase":-11.8,"label":0}`.
//! Gesture spans go to the sidecar `<name>.spans.json`
//! `{"format":"breathgest-spans","version":1,"subject":..,"scenario":..,"spans":[{"start":..,"end":..,"kind":2}]}`
//! with inclusive sample indices.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{GestureKind, GestureSpan, LabeledSeries, Provenance, Sample, Scenario};
use crate::error::{Error, Result};
use crate::format::{check_header, write_json, JsonlReader, JsonlWriter};

pub const SERIES_FORMAT_VERSION: u32 = 1;
const SERIES_FORMAT: &str = "breathgest-series";
const SPANS_FORMAT: &str = "breathgest-spans";

#[derive(Serialize, Deserialize)]
struct SampleRecord {
    subject: String,
    scenario: Scenario,
    t: f64,
    magnitude: f64,
    phase: f64,
    label: GestureKind,
}

#[derive(Serialize, Deserialize)]
struct SpansFile {
    format: String,
    version: u32,
    subject: String,
    scenario: Scenario,
    spans: Vec<GestureSpan>,
}

/// Sidecar path holding the spans of `series_path`.
pub fn spans_path(series_path: &Path) -> PathBuf {
    series_path.with_extension("spans.json")
}

pub fn write_series(series: &LabeledSeries, path: &Path) -> Result<()> {
    let mut extra = Map::new();
    extra.insert("subject".into(), Value::from(series.subject_id.clone()));
    extra.insert("scenario".into(), json!(series.scenario));
    extra.insert("provenance".into(), json!(series.provenance));
    extra.insert("samples".into(), Value::from(series.len()));
    let mut w = JsonlWriter::create(path, SERIES_FORMAT, SERIES_FORMAT_VERSION, extra)?;
    for (s, &label) in series.samples.iter().zip(&series.labels) {
        w.record(&SampleRecord {
            subject: series.subject_id.clone(),
            scenario: series.scenario,
            t: s.t,
            magnitude: s.magnitude,
            phase: s.phase,
            label,
        })?;
    }
    w.finish()?;
    write_json(
        &spans_path(path),
        &SpansFile {
            format: SPANS_FORMAT.into(),
            version: SERIES_FORMAT_VERSION,
            subject: series.subject_id.clone(),
            scenario: series.scenario,
            spans: series.spans.clone(),
        },
    )
}

pub fn read_series(path: &Path) -> Result<LabeledSeries> {
    let reader = JsonlReader::open(path, SERIES_FORMAT, SERIES_FORMAT_VERSION)?;
    let provenance: Provenance = reader
        .header
        .get("provenance")
        .cloned()
        .map(serde_json::from_value)
        .transpose()?
        .unwrap_or_default();
    let subject = reader.header.get("subject").and_then(Value::as_str).map(str::to_owned);
    let scenario: Option<Scenario> = reader.header.get("scenario").cloned().map(serde_json::from_value).transpose()?;
    let records: Vec<SampleRecord> = reader.records()?;

    let spans_text = std::fs::read_to_string(spans_path(path))?;
    let spans_value: Map<String, Value> = serde_json::from_str(&spans_text)?;
    check_header(&spans_value, SPANS_FORMAT, SERIES_FORMAT_VERSION)?;
    let spans: SpansFile = serde_json::from_value(Value::Object(spans_value))?;

    let subject_id = subject.or_else(|| records.first().map(|r| r.subject.clone())).unwrap_or(spans.subject);
    let scenario = scenario.or_else(|| records.first().map(|r| r.scenario)).unwrap_or(spans.scenario);
    let series = LabeledSeries {
        subject_id,
        scenario,
        samples: records.iter().map(|r| Sample { t: r.t, magnitude: r.magnitude, phase: r.phase }).collect(),
        labels: records.iter().map(|r| r.label).collect(),
        spans: spans.spans,
        provenance,
    };
    series.check().map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synth_session, SubjectProfile};

    #[test]
    fn round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("S07_walking.jsonl");
        let series = synth_session(&SubjectProfile::sample("S07", 3), Scenario::Walking, 1).unwrap();
        write_series(&series, &path).unwrap();
        assert!(spans_path(&path).exists());
        let back = read_series(&path).unwrap();
        assert_eq!(back, series);
    }

    #[test]
    fn wrong_version_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        std::fs::write(&path, "{\"format\":\"breathgest-series\",\"version\":9}\n").unwrap();
        assert!(matches!(read_series(&path), Err(Error::FormatVersionMismatch { .. })));
    }
}
