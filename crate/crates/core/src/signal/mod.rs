//! Synthetic bio-impedance signals.
//!
//! Breaths are rendered as half-sine humps on top of a per-subject baseline:
//! the magnitude rises during inhalation and falls back during exhalation.
//! Gestures are fixed sequences of deep and fast breaths, sessions interleave
//! gestures with regular breathing and add scenario-dependent drift and jitter.

mod afe;
mod io;
mod synth;

pub use afe::{afe_ratio_measurement, AfeConfig, MAX_STIMULUS_VPP};
pub use io::{read_series, spans_path, write_series, SERIES_FORMAT_VERSION};
pub use synth::{
    synth_breath, synth_gesture, synth_gesture_scaled, synth_session, synth_session_with,
    GestureSegment, Segment, GESTURE_TIME_JITTER, LABEL_TAIL_S,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling rate of the impedance front-end.
pub const SAMPLE_RATE_HZ: f64 = 20.0;

/// Gesture class. The integer codes are shared by labels, model outputs and
/// the post-processing transitions (2→3, 3→4, 2→1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
#[repr(u8)]
pub enum GestureKind {
    Null = 0,
    Sos = 1,
    SingleClick = 2,
    DoubleClick = 3,
    TripleClick = 4,
}

impl GestureKind {
    pub const COUNT: usize = 5;
    pub const ALL: [GestureKind; 5] = [
        GestureKind::Null,
        GestureKind::Sos,
        GestureKind::SingleClick,
        GestureKind::DoubleClick,
        GestureKind::TripleClick,
    ];
    pub const GESTURES: [GestureKind; 4] = [
        GestureKind::Sos,
        GestureKind::SingleClick,
        GestureKind::DoubleClick,
        GestureKind::TripleClick,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn is_null(self) -> bool {
        self == GestureKind::Null
    }

    pub fn name(self) -> &'static str {
        match self {
            GestureKind::Null => "null",
            GestureKind::Sos => "sos",
            GestureKind::SingleClick => "single_click",
            GestureKind::DoubleClick => "double_click",
            GestureKind::TripleClick => "triple_click",
        }
    }

    /// Breath sequence that performs the gesture.
    pub fn template(self) -> Result<&'static [BreathKind]> {
        use BreathKind::*;
        match self {
            GestureKind::Null => Err(Error::NullGesture),
            GestureKind::Sos => Ok(&[Deep, Fast, Deep]),
            GestureKind::SingleClick => Ok(&[Deep, Fast]),
            GestureKind::DoubleClick => Ok(&[Deep, Fast, Fast]),
            GestureKind::TripleClick => Ok(&[Deep, Fast, Fast, Fast]),
        }
    }
}

impl From<GestureKind> for u8 {
    fn from(k: GestureKind) -> u8 {
        k.code()
    }
}

impl TryFrom<u8> for GestureKind {
    type Error = String;

    fn try_from(code: u8) -> std::result::Result<Self, Self::Error> {
        GestureKind::from_code(code).ok_or_else(|| format!("invalid gesture code {code}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BreathKind {
    Regular,
    Deep,
    Fast,
}

/// One bio-impedance reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Seconds since the start of the series.
    pub t: f64,
    /// Ohms.
    pub magnitude: f64,
    /// Degrees.
    pub phase: f64,
}

/// Per-person breathing characteristics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectProfile {
    pub subject_id: String,
    /// Resting impedance magnitude, ohms.
    pub baseline_z: f64,
    /// Peak-to-trough magnitude of a regular breath, ohms.
    pub breath_amp: f64,
    /// Deep breath amplitude relative to a regular one.
    pub deep_scale: f64,
    pub fast_duration: f64,
    pub regular_period: f64,
    pub deep_duration: f64,
    pub rng_seed: u64,
}

impl Default for SubjectProfile {
    /// Nominal subject: deep + fast = 3.53 s (single click), deep + 3 fast =
    /// 5.32 s (triple click).
    fn default() -> Self {
        Self {
            subject_id: "S00".to_string(),
            baseline_z: 500.0,
            breath_amp: 10.0,
            deep_scale: 2.5,
            fast_duration: 0.895,
            regular_period: 2.2,
            deep_duration: 2.635,
            rng_seed: 0,
        }
    }
}

impl SubjectProfile {
    /// Random subject drawn around the nominal profile.
    pub fn sample(subject_id: impl Into<String>, seed: u64) -> Self {
        use rand::Rng;
        let mut rng = crate::seed::rng(seed);
        let nominal = Self::default();
        Self {
            subject_id: subject_id.into(),
            baseline_z: rng.random_range(350.0..650.0),
            breath_amp: rng.random_range(7.0..13.0),
            deep_scale: rng.random_range(2.0..3.0),
            fast_duration: nominal.fast_duration * rng.random_range(0.9..1.1),
            regular_period: rng.random_range(1.9..2.4),
            deep_duration: nominal.deep_duration * rng.random_range(0.92..1.08),
            rng_seed: crate::seed::derive(seed, 1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.baseline_z,
            self.breath_amp,
            self.fast_duration,
            self.regular_period,
            self.deep_duration,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "profile {} has non-positive amplitudes or durations",
                self.subject_id
            )));
        }
        if !(self.deep_scale > 1.0) {
            return Err(Error::InvalidConfig("deep_scale must exceed 1".into()));
        }
        if !(self.fast_duration < self.regular_period) {
            return Err(Error::InvalidConfig(
                "fast_duration must be shorter than regular_period".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Sitting,
    Lying,
    Walking,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Sitting, Scenario::Lying, Scenario::Walking];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Sitting => "sitting",
            Scenario::Lying => "lying",
            Scenario::Walking => "walking",
        }
    }

    pub fn index(self) -> u64 {
        self as u64
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownKey(s.to_string()))
    }
}

/// Additive noise of one scenario, in ohms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioNoise {
    /// Amplitude of the slow sinusoidal baseline drift.
    pub drift_amp: f64,
    /// Period of the drift, seconds.
    pub drift_period: f64,
    /// Standard deviation of white jitter on the magnitude.
    pub jitter_sigma: f64,
}

/// Noise parameters for every scenario. These are calibration knobs, not
/// measured values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub sitting: ScenarioNoise,
    pub lying: ScenarioNoise,
    pub walking: ScenarioNoise,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sitting: ScenarioNoise { drift_amp: 1.5, drift_period: 45.0, jitter_sigma: 0.3 },
            lying: ScenarioNoise { drift_amp: 1.0, drift_period: 60.0, jitter_sigma: 0.25 },
            walking: ScenarioNoise { drift_amp: 3.0, drift_period: 30.0, jitter_sigma: 0.8 },
        }
    }
}

impl NoiseConfig {
    pub fn get(&self, scenario: Scenario) -> ScenarioNoise {
        match scenario {
            Scenario::Sitting => self.sitting,
            Scenario::Lying => self.lying,
            Scenario::Walking => self.walking,
        }
    }
}

/// Inclusive sample range carrying one gesture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GestureSpan {
    pub start: usize,
    pub end: usize,
    pub kind: GestureKind,
}

impl GestureSpan {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index <= self.end
    }
}

/// Which transform, if any, produced a series.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Provenance {
    #[default]
    Original,
    Shift { delta: f64 },
    ScaleUp,
    ScaleDown,
    Gaussian { mu: f64, sigma: f64 },
}

/// A recorded (or synthesized) session of one subject in one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSeries {
    pub subject_id: String,
    pub scenario: Scenario,
    pub samples: Vec<Sample>,
    pub labels: Vec<GestureKind>,
    pub spans: Vec<GestureSpan>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl LabeledSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn magnitudes(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.magnitude)
    }

    /// Checks the structural invariants: one label per sample, sorted
    /// non-overlapping spans, and non-null labels exactly inside spans.
    pub fn check(&self) -> Result<()> {
        if self.labels.len() != self.samples.len() {
            return Err(Error::LengthMismatch { left: self.samples.len(), right: self.labels.len() });
        }
        let mut expected = vec![GestureKind::Null; self.labels.len()];
        let mut next_free = 0;
        for span in &self.spans {
            if span.start < next_free || span.end < span.start || span.end >= self.labels.len() {
                return Err(Error::Format(format!("bad span {span:?}")));
            }
            if span.kind.is_null() {
                return Err(Error::Format("span with null class".into()));
            }
            expected[span.start..=span.end].fill(span.kind);
            next_free = span.end + 1;
        }
        if expected != self.labels {
            return Err(Error::Format("labels disagree with gesture spans".into()));
        }
        Ok(())
    }
}
