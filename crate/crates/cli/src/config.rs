//! Experiment configuration: one JSON file describes the dataset source,
//! clustering strategy, architecture, training schedule, and split protocol.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use argue_core::datasets::SynthSpec;
use argue_core::trainer::TrainMode;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Synthetic(SynthSpec),
    Csv {
        path: PathBuf,
        #[serde(default)]
        label_column: Option<String>,
        #[serde(default)]
        class_column: Option<String>,
        #[serde(default)]
        attribute_column: Option<String>,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
        /// Class labels treated as normal; everything else is anomalous.
        normal_classes: Vec<String>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum ClusteringChoice {
    ByClass,
    ByAttribute {
        #[serde(default = "default_attribute_cap")]
        cap: usize,
    },
    ByAlgorithm {
        k: usize,
    },
}

fn default_attribute_cap() -> usize {
    argue_core::clustering::DEFAULT_ATTRIBUTE_CAP
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSection {
    pub encoder_dims: Vec<usize>,
    #[serde(default = "default_alarm_dims")]
    pub alarm_dims: Vec<usize>,
    #[serde(default = "default_gate_dims")]
    pub gate_dims: Vec<usize>,
}

fn default_alarm_dims() -> Vec<usize> {
    vec![32, 16]
}

fn default_gate_dims() -> Vec<usize> {
    vec![16]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingSection {
    #[serde(default = "default_epochs")]
    pub epochs_pretrain: usize,
    #[serde(default = "default_epochs")]
    pub epochs_detector: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_noise_ratio")]
    pub noise_ratio: f64,
    pub mode: TrainMode,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
}

fn default_epochs() -> usize {
    30
}

fn default_batch_size() -> usize {
    256
}

fn default_noise_ratio() -> f64 {
    1.0
}

fn default_learning_rate() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSection {
    pub test_fraction: f64,
    #[serde(default)]
    pub pollution_rate: f64,
    #[serde(default)]
    pub known_anomaly_budget: usize,
}

/// Class-count sweep: re-run the experiment with the normal data restricted
/// to a growing prefix of its classes, against the same anomaly set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSection {
    pub normal_class_limits: Vec<usize>,
    /// When set, every sweep point pollutes exactly this many anomalies
    /// instead of using the split's pollution_rate.
    #[serde(default)]
    pub pollution_count: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_repeat_count")]
    pub repeat_count: usize,
    pub output_dir: PathBuf,
    pub dataset: DatasetSource,
    pub clustering: ClusteringChoice,
    pub model: ModelSection,
    pub training: TrainingSection,
    pub split: SplitSection,
    /// Optional fraction of training normals held aside, untouched by
    /// training, for manual validation.
    #[serde(default)]
    pub validation_fraction: Option<f64>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeat_count == 0 {
            bail!("repeat_count must be >= 1");
        }
        if self.model.encoder_dims.is_empty() {
            bail!("model.encoder_dims must not be empty");
        }
        if self.training.mode == TrainMode::Unsupervised && self.split.known_anomaly_budget > 0 {
            bail!("unsupervised mode cannot use a known-anomaly budget");
        }
        if let Some(v) = self.validation_fraction {
            if !(0.0..1.0).contains(&v) {
                bail!("validation_fraction must be in [0, 1)");
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.normal_class_limits.is_empty() {
                bail!("sweep.normal_class_limits must not be empty");
            }
            if sweep.normal_class_limits.contains(&0) {
                bail!("sweep class limits must be >= 1");
            }
        }
        Ok(())
    }
}

fn default_repeat_count() -> usize {
    5
}
