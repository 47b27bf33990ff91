use std::f64::consts::PI;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{
    BreathKind, GestureKind, GestureSpan, LabeledSeries, NoiseConfig, Provenance, Sample, Scenario,
    ScenarioNoise, SubjectProfile, SAMPLE_RATE_HZ,
};
use crate::error::{Error, Result};
use crate::seed;

/// Phase channel gain relative to the magnitude deviation (degrees per ohm).
const PHASE_GAIN: f64 = 0.2;
const PHASE_BASELINE_DEG: f64 = -12.0;
/// Gesture durations are scaled by a factor drawn from `1 ± GESTURE_TIME_JITTER`.
pub const GESTURE_TIME_JITTER: f64 = 0.15;
/// Regular breaths vary by this fraction in period and amplitude.
const REGULAR_JITTER: f64 = 0.1;
/// Regular cycles between consecutive gestures (inclusive range).
const GAP_CYCLES: (usize, usize) = (3, 4);
/// Seconds of the following regular breath still labeled with the gesture.
/// The end of a gesture only shows once the next breath turns out not to be
/// another fast one, so the annotated span runs slightly past the last exhale.
pub const LABEL_TAIL_S: f64 = 0.5;

/// A contiguous run of samples with time starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub samples: Vec<Sample>,
    /// Breaths making up the segment with their sample ranges.
    pub breaths: Vec<(BreathKind, Range<usize>)>,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / SAMPLE_RATE_HZ
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GestureSegment {
    pub segment: Segment,
    /// Span of the gesture inside `segment` (covers all of it).
    pub span: GestureSpan,
}

fn sample_count(duration: f64) -> usize {
    ((duration * SAMPLE_RATE_HZ).round() as usize).max(2)
}

/// Half-sine hump of `n` samples starting and ending at the baseline.
fn hump(amp: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| amp * (PI * k as f64 / n as f64).sin())
}

fn breath_shape(kind: BreathKind, profile: &SubjectProfile) -> (f64, f64) {
    match kind {
        BreathKind::Regular => (profile.breath_amp, profile.regular_period),
        BreathKind::Deep => (profile.breath_amp * profile.deep_scale, profile.deep_duration),
        BreathKind::Fast => (profile.breath_amp, profile.fast_duration),
    }
}

/// Deviation from baseline of a breath sequence, with each breath's range.
fn render(
    breaths: &[BreathKind],
    profile: &SubjectProfile,
    time_scale: f64,
) -> (Vec<f64>, Vec<(BreathKind, Range<usize>)>) {
    let mut dev = Vec::new();
    let mut parts = Vec::with_capacity(breaths.len());
    for &kind in breaths {
        let (amp, duration) = breath_shape(kind, profile);
        let start = dev.len();
        dev.extend(hump(amp, sample_count(duration * time_scale)));
        parts.push((kind, start..dev.len()));
    }
    (dev, parts)
}

/// Three-tap moving average, edges use the available neighbours.
fn smooth3(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 2).min(x.len());
            x[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

fn noiseless_samples(dev: &[f64], profile: &SubjectProfile) -> Vec<Sample> {
    let phase_dev = smooth3(dev);
    dev.iter()
        .zip(&phase_dev)
        .enumerate()
        .map(|(k, (&d, &p))| Sample {
            t: k as f64 / SAMPLE_RATE_HZ,
            magnitude: profile.baseline_z + d,
            phase: PHASE_BASELINE_DEG + PHASE_GAIN * p,
        })
        .collect()
}

/// One noiseless inhale/exhale cycle.
pub fn synth_breath(kind: BreathKind, profile: &SubjectProfile) -> Segment {
    let (dev, breaths) = render(&[kind], profile, 1.0);
    Segment { samples: noiseless_samples(&dev, profile), breaths }
}

/// Noiseless gesture at its nominal duration.
pub fn synth_gesture(kind: GestureKind, profile: &SubjectProfile) -> Result<GestureSegment> {
    synth_gesture_scaled(kind, profile, 1.0)
}

/// Gesture with every breath stretched by `time_scale`.
pub fn synth_gesture_scaled(
    kind: GestureKind,
    profile: &SubjectProfile,
    time_scale: f64,
) -> Result<GestureSegment> {
    let (dev, breaths) = render(kind.template()?, profile, time_scale);
    let span = GestureSpan { start: 0, end: dev.len() - 1, kind };
    Ok(GestureSegment { segment: Segment { samples: noiseless_samples(&dev, profile), breaths }, span })
}

/// A full session with the default scenario noise.
pub fn synth_session(profile: &SubjectProfile, scenario: Scenario, trials_per_gesture: usize) -> Result<LabeledSeries> {
    synth_session_with(profile, scenario, trials_per_gesture, &NoiseConfig::default())
}

/// A session: every gesture `trials_per_gesture` times in a seeded random
/// order, separated by regular breathing, with drift and jitter on top.
pub fn synth_session_with(
    profile: &SubjectProfile,
    scenario: Scenario,
    trials_per_gesture: usize,
    noise: &NoiseConfig,
) -> Result<LabeledSeries> {
    if trials_per_gesture == 0 {
        return Err(Error::InvalidConfig("trials_per_gesture must be at least 1".into()));
    }
    profile.validate()?;
    let mut rng = seed::rng(seed::derive(profile.rng_seed, scenario.index()));

    let mut order: Vec<GestureKind> = GestureKind::GESTURES
        .iter()
        .flat_map(|&k| std::iter::repeat_n(k, trials_per_gesture))
        .collect();
    order.shuffle(&mut rng);

    let mut dev: Vec<f64> = Vec::new();
    let mut labels: Vec<GestureKind> = Vec::new();
    let mut spans = Vec::with_capacity(order.len());

    let regular = |dev: &mut Vec<f64>, labels: &mut Vec<GestureKind>, rng: &mut rand_chacha::ChaCha8Rng| {
        let cycles = rng.random_range(GAP_CYCLES.0..=GAP_CYCLES.1);
        for _ in 0..cycles {
            let amp = profile.breath_amp * rng.random_range(1.0 - REGULAR_JITTER..1.0 + REGULAR_JITTER);
            let period = profile.regular_period * rng.random_range(1.0 - REGULAR_JITTER..1.0 + REGULAR_JITTER);
            let n = sample_count(period);
            dev.extend(hump(amp, n));
            labels.extend(std::iter::repeat_n(GestureKind::Null, n));
        }
    };

    regular(&mut dev, &mut labels, &mut rng);
    for kind in order {
        let scale = rng.random_range(1.0 - GESTURE_TIME_JITTER..1.0 + GESTURE_TIME_JITTER);
        let (g, _) = render(kind.template()?, profile, scale);
        let start = dev.len();
        dev.extend_from_slice(&g);
        labels.extend(std::iter::repeat_n(kind, g.len()));
        regular(&mut dev, &mut labels, &mut rng);
        let end = (start + g.len() - 1 + sample_count(LABEL_TAIL_S)).min(dev.len() - 1);
        labels[start..=end].fill(kind);
        spans.push(GestureSpan { start, end, kind });
    }

    let samples = add_noise(&dev, profile, noise.get(scenario), &mut rng);
    Ok(LabeledSeries {
        subject_id: profile.subject_id.clone(),
        scenario,
        samples,
        labels,
        spans,
        provenance: Provenance::Original,
    })
}

fn add_noise(dev: &[f64], profile: &SubjectProfile, noise: ScenarioNoise, rng: &mut impl Rng) -> Vec<Sample> {
    let phase0 = rng.random_range(0.0..2.0 * PI);
    let jitter = Normal::new(0.0, noise.jitter_sigma).expect("finite sigma");
    // The phase channel sees the same drift but twice the relative jitter.
    let phase_jitter = Normal::new(0.0, 2.0 * PHASE_GAIN * noise.jitter_sigma).expect("finite sigma");
    let phase_dev = smooth3(dev);
    dev.iter()
        .zip(&phase_dev)
        .enumerate()
        .map(|(k, (&d, &p))| {
            let t = k as f64 / SAMPLE_RATE_HZ;
            let drift = noise.drift_amp * (2.0 * PI * t / noise.drift_period + phase0).sin();
            let magnitude = (profile.baseline_z + d + drift + jitter.sample(rng)).max(f64::MIN_POSITIVE);
            let phase = PHASE_BASELINE_DEG + PHASE_GAIN * (p + drift) + phase_jitter.sample(rng);
            Sample { t, magnitude, phase }
        })
        .collect()
}
