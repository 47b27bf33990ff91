//! Training-set augmentation on the magnitude channel.
//!
//! * shift: `Z ± δ`
//! * scale up / down: `Z² / Z_mean` and `√Z · √Z_mean`, with `Z_mean` the mean
//!   magnitude of the whole series
//! * Gaussian: `Z + N(μ, σ²)`
//!
//! Phase and labels are left untouched. [`augment_set`] keeps each original
//! series and appends four variants, so the set grows fivefold.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::signal::{LabeledSeries, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentConfig {
    /// Shift magnitudes are drawn uniformly from this range, ohms.
    pub delta_min: f64,
    pub delta_max: f64,
    pub gauss_mu: f64,
    pub gauss_sigma: f64,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { delta_min: 1.0, delta_max: 5.0, gauss_mu: 0.0, gauss_sigma: 0.5, seed: 0 }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gauss_sigma >= 0.0 && self.gauss_sigma.is_finite()) {
            return Err(Error::InvalidConfig("gauss_sigma must be finite and >= 0".into()));
        }
        if !(0.0 <= self.delta_min && self.delta_min <= self.delta_max) {
            return Err(Error::InvalidConfig("need 0 <= delta_min <= delta_max".into()));
        }
        Ok(())
    }
}

fn map_magnitude(series: &LabeledSeries, provenance: Provenance, f: impl Fn(f64) -> f64) -> LabeledSeries {
    let mut out = series.clone();
    for s in &mut out.samples {
        s.magnitude = f(s.magnitude);
    }
    out.provenance = provenance;
    out
}

/// Offsets every magnitude by `sign · delta`.
pub fn shift(series: &LabeledSeries, delta: f64, sign: f64) -> LabeledSeries {
    let offset = sign.signum() * delta;
    map_magnitude(series, Provenance::Shift { delta: offset }, |z| z + offset)
}

/// Mean magnitude of a session.
pub fn session_mean(series: &LabeledSeries) -> Result<f64> {
    let mut sum = 0.0;
    for z in series.magnitudes() {
        if !(z > 0.0) {
            return Err(Error::NonPositiveMagnitude(z));
        }
        sum += z;
    }
    if series.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(sum / series.len() as f64)
}

pub fn scale_up(series: &LabeledSeries) -> Result<LabeledSeries> {
    scale_up_with_mean(series, session_mean(series)?)
}

pub fn scale_down(series: &LabeledSeries) -> Result<LabeledSeries> {
    scale_down_with_mean(series, session_mean(series)?)
}

/// `Z² / z_mean` for a caller-supplied mean.
pub fn scale_up_with_mean(series: &LabeledSeries, z_mean: f64) -> Result<LabeledSeries> {
    check_positive(series, z_mean)?;
    Ok(map_magnitude(series, Provenance::ScaleUp, |z| z * z / z_mean))
}

/// `√Z · √z_mean` for a caller-supplied mean.
pub fn scale_down_with_mean(series: &LabeledSeries, z_mean: f64) -> Result<LabeledSeries> {
    check_positive(series, z_mean)?;
    // sqrt(z * m) equals √z·√m and is exact at the fixed point z == m.
    Ok(map_magnitude(series, Provenance::ScaleDown, |z| (z * z_mean).sqrt()))
}

fn check_positive(series: &LabeledSeries, z_mean: f64) -> Result<()> {
    if !(z_mean > 0.0) {
        return Err(Error::NonPositiveMagnitude(z_mean));
    }
    match series.magnitudes().find(|z| !(*z > 0.0)) {
        Some(z) => Err(Error::NonPositiveMagnitude(z)),
        None => Ok(()),
    }
}

/// Adds i.i.d. `N(mu, sigma²)` noise to every magnitude.
pub fn gaussian(series: &LabeledSeries, mu: f64, sigma: f64, seed: u64) -> Result<LabeledSeries> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!("gaussian sigma {sigma} is negative")));
    }
    let normal = Normal::new(mu, sigma).map_err(|e| Error::InvalidConfig(format!("gaussian noise: {e}")))?;
    let mut rng = seed::rng(seed);
    let mut out = series.clone();
    for s in &mut out.samples {
        s.magnitude += normal.sample(&mut rng);
    }
    out.provenance = Provenance::Gaussian { mu, sigma };
    Ok(out)
}

/// Original series followed by its shift, scale-up, scale-down and Gaussian
/// variants, for every input series in order.
pub fn augment_set(dataset: &[LabeledSeries], cfg: &AugmentConfig) -> Result<Vec<LabeledSeries>> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut out = Vec::with_capacity(dataset.len() * 5);
    for (i, series) in dataset.iter().enumerate() {
        let mut rng = seed::rng(seed::derive(cfg.seed, 2 * i as u64));
        let delta = if cfg.delta_max > cfg.delta_min {
            rng.random_range(cfg.delta_min..cfg.delta_max)
        } else {
            cfg.delta_min
        };
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let mean = session_mean(series)?;
        out.push(series.clone());
        out.push(shift(series, delta, sign));
        out.push(scale_up_with_mean(series, mean)?);
        out.push(scale_down_with_mean(series, mean)?);
        out.push(gaussian(series, cfg.gauss_mu, cfg.gauss_sigma, seed::derive(cfg.seed, 2 * i as u64 + 1))?);
    }
    Ok(out)
}
