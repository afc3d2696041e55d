//! Experiment configuration, read from JSON. Every field has a default.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixer::{MixMode, MixupConfig};
use crate::model::{ModelSpec, OptimizerKind};
use crate::similarity::{Backend, KernelConfig};

use super::data::{BlobsConfig, CsvSchema, Task};
use super::split::SplitFractions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Csv {
        path: PathBuf,
        #[serde(default)]
        schema: CsvSchema,
    },
    Blobs {
        #[serde(default)]
        blobs: BlobsConfig,
    },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Csv {
            path: PathBuf::from("data/airfoil_self_noise.dat"),
            schema: CsvSchema {
                has_header: false,
                ..CsvSchema::default()
            },
        }
    }
}

impl DataSource {
    pub fn task(&self) -> Task {
        match self {
            DataSource::Csv { schema, .. } => schema.task,
            DataSource::Blobs { .. } => Task::Classification,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    #[default]
    Constant,
    /// Cosine decay from the base rate to 0 over the run.
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub schedule: Schedule,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::adam(),
            learning_rate: 0.01,
            weight_decay: 0.0,
            schedule: Schedule::Constant,
            epochs: 100,
            batch_size: 16,
        }
    }
}

impl TrainingConfig {
    /// Learning rate for a zero-based epoch.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        match self.schedule {
            Schedule::Constant => self.learning_rate,
            Schedule::Cosine => {
                let t = epoch as f64 / self.epochs.max(1) as f64;
                0.5 * self.learning_rate * (1.0 + (std::f64::consts::PI * t).cos())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Stochastic passes for MC dropout (regression).
    pub mc_samples: usize,
    /// Bins for ECE, UCE and ENCE.
    pub num_bins: usize,
    /// Fit a temperature on the validation split (classification).
    pub temperature_scaling: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            mc_samples: 50,
            num_bins: 15,
            temperature_scaling: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub data: DataSource,
    pub split: SplitFractions,
    pub seeds: Vec<u64>,
    pub model: ModelSpec,
    pub training: TrainingConfig,
    pub mixup: MixupConfig,
    pub eval: EvalConfig,
    /// Where the CLI writes outputs when `--out` is not given.
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            data: DataSource::default(),
            split: SplitFractions::default(),
            seeds: (0..10).collect(),
            model: ModelSpec::default(),
            training: TrainingConfig::default(),
            mixup: MixupConfig::new(0.5, MixMode::Off),
            eval: EvalConfig::default(),
            output_dir: PathBuf::from("runs"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let t = &self.training;
        if t.epochs == 0 || t.batch_size == 0 {
            return Err(Error::Config(
                "epochs and batch_size must be positive".into(),
            ));
        }
        if !(t.learning_rate.is_finite() && t.learning_rate >= 0.0) {
            return Err(Error::Config(format!(
                "bad learning rate {}",
                t.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.model.dropout) {
            return Err(Error::Config(format!("bad dropout {}", self.model.dropout)));
        }
        if self.eval.num_bins == 0 {
            return Err(Error::Config("num_bins must be positive".into()));
        }
        let task = self.data.task();
        if task == Task::Regression && self.eval.mc_samples < 2 {
            return Err(Error::Config("mc_samples must be at least 2".into()));
        }
        if task == Task::Regression && self.model.dropout <= 0.0 {
            return Err(Error::Config(
                "regression uses MC dropout and needs a positive dropout rate".into(),
            ));
        }
        self.mixup
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        for k in [self.mixup.input_kernel, self.mixup.output_kernel]
            .iter()
            .flatten()
        {
            let ok = !matches!(
                (task, k.backend),
                (Task::Regression, Backend::ClassWeight) | (Task::Classification, Backend::Label)
            );
            if !ok {
                return Err(Error::Config(format!(
                    "backend {:?} does not apply to {task:?}",
                    k.backend
                )));
            }
            if k.backend == Backend::Embedding && self.model.hidden.is_empty() {
                return Err(Error::Config(
                    "the embedding backend needs a hidden layer".into(),
                ));
            }
        }
        Ok(())
    }

    /// The same experiment with kernel-warped mixup at `(tau_max, tau_std)`.
    /// Backends already configured are kept; otherwise regression measures
    /// label distances and classification embedding distances.
    pub fn with_kernel(&self, tau_max: f64, tau_std: f64) -> Result<Self> {
        let default_backend = match self.data.task() {
            Task::Regression => Backend::Label,
            Task::Classification => Backend::Embedding,
        };
        let kernel = |k: Option<KernelConfig>| {
            KernelConfig::new(tau_max, tau_std, k.map_or(default_backend, |k| k.backend))
        };
        let mut out = self.clone();
        out.mixup.mode = MixMode::KernelWarped;
        out.mixup.input_kernel = Some(kernel(self.mixup.input_kernel)?);
        out.mixup.output_kernel = Some(kernel(self.mixup.output_kernel)?);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_json_gives_defaults() {
        let c = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.training.batch_size, 16);
        assert_eq!(c.training.learning_rate, 0.01);
        assert_eq!(c.seeds.len(), 10);
        assert_eq!(c.eval.mc_samples, 50);
        assert_eq!(c.model.hidden, vec![128, 128]);
    }

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::default().with_kernel(1e-4, 1.5).unwrap();
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(ExperimentConfig::from_json(r#"{"epochs": 3}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"seeds": []}"#).is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"split": {"train": 0.5, "valid": 0.2, "test": 0.2}}"#
        )
        .is_err());
        let bad = r#"{"mixup": {"alpha": 1.0, "mode": "kernel_warped"}}"#;
        assert!(ExperimentConfig::from_json(bad).is_err());
    }

    #[test]
    fn blob_source_and_backends() {
        let c = ExperimentConfig::from_json(r#"{"data": {"source": "blobs"}}"#).unwrap();
        assert_eq!(c.data.task(), Task::Classification);
        let k = c.with_kernel(1.0, 1.0).unwrap();
        assert_eq!(k.mixup.input_kernel.unwrap().backend, Backend::Embedding);
        let mut bad = k.clone();
        bad.mixup.input_kernel.as_mut().unwrap().backend = Backend::Label;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn cosine_schedule() {
        let t = TrainingConfig {
            schedule: Schedule::Cosine,
            epochs: 10,
            ..TrainingConfig::default()
        };
        assert_eq!(t.learning_rate_at(0), 0.01);
        assert!((t.learning_rate_at(5) - 0.005).abs() < 1e-15);
    }
}
