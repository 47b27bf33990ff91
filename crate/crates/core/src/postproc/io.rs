use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::events::{GestureEvent, StepClock};
use super::stream::Finalized;
use crate::error::Result;
use crate::format::{JsonlReader, JsonlWriter};
use crate::signal::GestureKind;

pub const EVENTS_FORMAT: &str = "breathgest-events";
pub const TRACE_FORMAT: &str = "breathgest-trace";
pub const POSTPROC_FORMAT_VERSION: u32 = 1;

/// Writes events as JSON-Lines after a version header.
pub fn save_events(path: &Path, events: &[GestureEvent], extra: Map<String, Value>) -> Result<()> {
    let mut w = JsonlWriter::create(path, EVENTS_FORMAT, POSTPROC_FORMAT_VERSION, extra)?;
    for e in events {
        w.record(e)?;
    }
    w.finish()
}

pub fn load_events(path: &Path) -> Result<Vec<GestureEvent>> {
    JsonlReader::open(path, EVENTS_FORMAT, POSTPROC_FORMAT_VERSION)?.records()
}

/// One line of a per-step trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub t: f64,
    pub raw: GestureKind,
    pub label: GestureKind,
}

pub fn save_trace(path: &Path, trace: &[Finalized], clock: &StepClock, extra: Map<String, Value>) -> Result<()> {
    let mut w = JsonlWriter::create(path, TRACE_FORMAT, POSTPROC_FORMAT_VERSION, extra)?;
    for f in trace {
        w.record(&TraceRecord { step: f.step, t: clock.time(f.step), raw: f.raw, label: f.corrected })?;
    }
    w.finish()
}

pub fn load_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    JsonlReader::open(path, TRACE_FORMAT, POSTPROC_FORMAT_VERSION)?.records()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::postproc::{eventize, stream_all, Strategies};

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let seq: Vec<_> = [0u8, 2, 3, 3, 0, 0, 4, 4, 4, 0].iter().map(|&c| GestureKind::from_code(c).unwrap()).collect();
        let events = eventize(&seq);
        let path = dir.path().join("events.jsonl");
        save_events(&path, &events, Map::new()).unwrap();
        assert_eq!(load_events(&path).unwrap(), events);
        let first = std::fs::read_to_string(&path).unwrap().lines().next().unwrap().to_string();
        assert!(first.contains("\"format\":\"breathgest-events\"") && first.contains("\"version\":1"));

        let (trace, _) = stream_all(&seq, Strategies::ALL);
        let path = dir.path().join("trace.jsonl");
        save_trace(&path, &trace, &StepClock::default(), Map::new()).unwrap();
        let back = load_trace(&path).unwrap();
        assert_eq!(back.len(), seq.len());
        assert!(back.windows(2).all(|w| w[0].t < w[1].t));
        assert!(crate::postproc::load_events(&path).is_err());
    }
}
