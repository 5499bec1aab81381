//! Experiment configuration: one TOML file drives every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::nn::ArchConfig;
use crate::signal::ScalingTable;
use crate::synth::SingleTrackParams;
use crate::train::TrainConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub data_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub checkpoint_dir: PathBuf,
    pub report_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            data_dir: "data".into(),
            cache_dir: "cache".into(),
            checkpoint_dir: "checkpoints".into(),
            report_dir: "reports".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub sample_rate_hz: f64,
    /// Number of training acquisitions to generate.
    pub train_runs: usize,
    pub train_duration_s: f64,
    pub test_duration_s: f64,
    pub vehicle: SingleTrackParams,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            sample_rate_hz: 100.0,
            train_runs: 2,
            train_duration_s: 60.0,
            test_duration_s: 40.0,
            vehicle: SingleTrackParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    /// Cutoff the model trains (and evaluates) under.
    pub training_cutoff_hz: f64,
    /// Every cutoff a dataset cache is built for.
    pub cutoff_list_hz: Vec<f64>,
    pub window_len: usize,
    pub filter_order: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            training_cutoff_hz: 5.0,
            cutoff_list_hz: vec![45.0, 25.0, 5.0, 0.5],
            window_len: 100,
            filter_order: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub val_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            val_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub cutoffs_hz: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            cutoffs_hz: vec![45.0, 25.0, 15.0, 5.0, 1.0],
        }
    }
}

/// Everything a pipeline run needs, with sensible defaults for every field.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub paths: PathsConfig,
    pub synth: SynthConfig,
    pub preprocess: PreprocessConfig,
    pub scaling: ScalingTable,
    pub split: SplitConfig,
    pub train: TrainConfig,
    pub arch: ArchConfig,
    pub sweep: SweepConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Parse(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(format!("cannot serialize config: {e}")))
    }

    /// SHA-256 of the canonical serialized config, for artifact provenance.
    pub fn hash(&self) -> Result<String> {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.to_toml_string()?.as_bytes());
        Ok(hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect())
    }

    pub fn validate(&self) -> Result<()> {
        let nyquist = self.synth.sample_rate_hz / 2.0;
        if !(self.synth.sample_rate_hz > 0.0) {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        for &c in self
            .preprocess
            .cutoff_list_hz
            .iter()
            .chain(std::iter::once(&self.preprocess.training_cutoff_hz))
            .chain(&self.sweep.cutoffs_hz)
        {
            if !(c > 0.0 && c < nyquist) {
                return Err(Error::Config(format!(
                    "cutoff {c} Hz outside (0, {nyquist}) at {} Hz sampling",
                    self.synth.sample_rate_hz
                )));
            }
        }
        if self.preprocess.window_len == 0 {
            return Err(Error::Config("window length must be at least 1".into()));
        }
        if self.preprocess.filter_order == 0 || self.preprocess.filter_order % 2 != 0 {
            return Err(Error::Config(format!(
                "filter order must be a positive even integer, got {}",
                self.preprocess.filter_order
            )));
        }
        if self.synth.train_runs == 0 {
            return Err(Error::Config("need at least one training run".into()));
        }
        self.synth.vehicle.validate()?;
        self.scaling.validate()?;
        self.train.validate()?;
        self.arch.validate()?;
        Ok(())
    }

    /// Cache file name for a cutoff, e.g. `train_5.vemods`, `test_0.5.vemods`.
    pub fn cache_path(&self, kind: &str, cutoff_hz: f64) -> PathBuf {
        self.paths
            .cache_dir
            .join(format!("{kind}_{}.vemods", fmt_hz(cutoff_hz)))
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.paths
            .checkpoint_dir
            .join(format!("vemo_{}.ck", fmt_hz(self.preprocess.training_cutoff_hz)))
    }
}

/// Compact cutoff formatting for file names: 5.0 -> "5", 0.5 -> "0.5".
pub fn fmt_hz(hz: f64) -> String {
    format!("{hz}")
}
