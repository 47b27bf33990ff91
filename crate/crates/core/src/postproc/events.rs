use serde::{Deserialize, Serialize};

use super::batch::majority_vote;
use crate::dataset::{WINDOW_SIZE, WINDOW_STEP};
use crate::signal::{GestureKind, SAMPLE_RATE_HZ};

/// Maps a time-step index to the time of the last sample of its window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepClock {
    pub window: usize,
    pub step: usize,
    pub rate_hz: f64,
}

impl Default for StepClock {
    fn default() -> Self {
        Self { window: WINDOW_SIZE, step: WINDOW_STEP, rate_hz: SAMPLE_RATE_HZ }
    }
}

impl StepClock {
    pub fn sample_index(&self, step: usize) -> usize {
        self.window - 1 + self.step * step
    }

    pub fn time(&self, step: usize) -> f64 {
        self.sample_index(step) as f64 / self.rate_hz
    }
}

/// One recognized gesture: a maximal non-null run of time steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureEvent {
    pub kind: GestureKind,
    /// First and last step of the run, inclusive.
    pub start_step: usize,
    pub end_step: usize,
    pub t_start: f64,
    pub t_end: f64,
}

impl GestureEvent {
    pub(crate) fn new(kind: GestureKind, start_step: usize, end_step: usize, clock: &StepClock) -> Self {
        Self { kind, start_step, end_step, t_start: clock.time(start_step), t_end: clock.time(end_step) }
    }

    pub fn steps(&self) -> std::ops::RangeInclusive<usize> {
        self.start_step..=self.end_step
    }
}

/// One event per maximal non-null run, labeled with the run's majority class.
pub fn eventize(seq: &[GestureKind]) -> Vec<GestureEvent> {
    eventize_with(seq, &StepClock::default())
}

pub fn eventize_with(seq: &[GestureKind], clock: &StepClock) -> Vec<GestureEvent> {
    let mut events = Vec::new();
    let mut i = 0;
    while i < seq.len() {
        if seq[i].is_null() {
            i += 1;
            continue;
        }
        let start = i;
        while i < seq.len() && !seq[i].is_null() {
            i += 1;
        }
        let kind = majority_vote(&seq[start..i]).expect("non-empty run");
        events.push(GestureEvent::new(kind, start, i - 1, clock));
    }
    events
}
