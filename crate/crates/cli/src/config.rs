//! Run configuration read from TOML. Unknown keys are rejected and every
//! seed is derived from the single master seed.

use std::path::{Path, PathBuf};

use anyhow::Context;
use breathgest::augment::AugmentConfig;
use breathgest::breathnet::{ModelConfig, TrainConfig};
use breathgest::dataset::WINDOW_STEP;
use breathgest::eval::{CvConfig, CvMode};
use breathgest::postproc::Strategies;
use breathgest::signal::NoiseConfig;
use breathgest::{seed, Scenario};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataSection,
    pub noise: NoiseConfig,
    pub augment: AugmentSection,
    pub model: ModelConfig,
    pub train: TrainSection,
    pub eval: EvalSection,
    pub paths: PathsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            data: DataSection::default(),
            noise: NoiseConfig::default(),
            augment: AugmentSection::default(),
            model: ModelConfig::default(),
            train: TrainSection::default(),
            eval: EvalSection::default(),
            paths: PathsSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub subjects: usize,
    pub scenarios: Vec<Scenario>,
    pub trials: usize,
}

impl Default for DataSection {
    fn default() -> Self {
        Self { subjects: 8, scenarios: Scenario::ALL.to_vec(), trials: 15 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentSection {
    pub enabled: bool,
    pub delta_min: f64,
    pub delta_max: f64,
    pub gauss_mu: f64,
    pub gauss_sigma: f64,
}

impl Default for AugmentSection {
    fn default() -> Self {
        let d = AugmentConfig::default();
        Self { enabled: true, delta_min: d.delta_min, delta_max: d.delta_max, gauss_mu: d.gauss_mu, gauss_sigma: d.gauss_sigma }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
    /// Stride between training windows.
    pub window_step: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            lr: d.lr,
            batch_size: d.batch_size,
            max_epochs: d.max_epochs,
            patience: d.patience,
            val_fraction: d.val_fraction,
            window_step: WINDOW_STEP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub mode: CvMode,
    pub strategies: String,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { mode: CvMode::Lopo, strategies: Strategies::ALL.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    /// Where `gen` writes and the other commands read series.
    pub data: PathBuf,
    /// Default output directory of `augment`, `train`, `eval` and `stream`.
    pub out: PathBuf,
}

impl Default for PathsSection {
    fn default() -> Self {
        Self { data: "data".into(), out: "out".into() }
    }
}

/// Seeds fanned out from the master seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedSeeds {
    pub master: u64,
    pub augment: u64,
    pub train: u64,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn subject_id(index: usize) -> String {
        format!("S{}", index + 1)
    }

    pub fn subject_seed(&self, id: &str) -> u64 {
        seed::derive_named(self.seed, &format!("subject/{id}"))
    }

    pub fn seeds(&self) -> DerivedSeeds {
        DerivedSeeds {
            master: self.seed,
            augment: seed::derive_named(self.seed, "augment"),
            train: seed::derive_named(self.seed, "train"),
        }
    }

    pub fn augment_config(&self) -> Option<AugmentConfig> {
        let a = &self.augment;
        a.enabled.then(|| AugmentConfig {
            delta_min: a.delta_min,
            delta_max: a.delta_max,
            gauss_mu: a.gauss_mu,
            gauss_sigma: a.gauss_sigma,
            seed: self.seeds().augment,
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            lr: t.lr,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            patience: t.patience,
            seed: self.seeds().train,
            val_fraction: t.val_fraction,
        }
    }

    pub fn strategies(&self) -> anyhow::Result<Strategies> {
        Ok(self.eval.strategies.parse()?)
    }

    pub fn cv_config(&self, mode: CvMode, strategies: Strategies) -> CvConfig {
        CvConfig {
            mode,
            model: self.model.clone(),
            train: self.train_config(),
            augment: self.augment_config(),
            train_step: self.train.window_step,
            strategies,
        }
    }
}
