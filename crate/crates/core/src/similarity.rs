//! Batch-normalized pair distances and the similarity kernel that turns them
//! into warping parameters.
//!
//! For a batch `p_1..p_n` mixed along a permutation σ,
//!
//! ```text
//! d̄_i = ‖p_i − p_σ(i)‖² / ((1/n) Σ_j ‖p_j − p_σ(j)‖²)
//! τ_i = (1 / τ_max) · exp((d̄_i − 1) / (2 τ_std²))
//! ```
//!
//! so a pair at the batch-mean distance gets τ = 1/τ_max, closer pairs a
//! smaller τ (stronger mixing) and farther pairs a larger one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Matrix};
use crate::mixer::{Batch, Permutation, Targets};
use crate::model::Mlp;
use crate::special::{SHAPE_MAX, SHAPE_MIN};
use crate::warping::WarpParam;

/// Batch-mean distances below this are treated as a degenerate batch.
pub const DEGENERATE_MEAN: f64 = 1e-12;

/// Which representation distances are measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Raw (normalized) inputs.
    RawInput,
    /// Encoder outputs h_φ(x) under the current parameters.
    Embedding,
    /// Classification weight row of each sample's label, w_{y_i}.
    ClassWeight,
    /// Regression targets.
    Label,
}

impl Backend {
    pub fn needs_model(self) -> bool {
        matches!(self, Backend::Embedding | Backend::ClassWeight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// Amplitude τ_max.
    pub tau_max: f64,
    /// Standard deviation τ_std.
    pub tau_std: f64,
    pub backend: Backend,
}

impl KernelConfig {
    pub fn new(tau_max: f64, tau_std: f64, backend: Backend) -> Result<Self> {
        let cfg = Self {
            tau_max,
            tau_std,
            backend,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_max.is_finite() && self.tau_max > 0.0) {
            return Err(Error::usage(format!(
                "tau_max must be positive, got {}",
                self.tau_max
            )));
        }
        if self.tau_std.is_nan() || self.tau_std <= 0.0 {
            return Err(Error::usage(format!(
                "tau_std must be positive, got {}",
                self.tau_std
            )));
        }
        Ok(())
    }
}

/// Normalized squared distances d̄, one per batch element.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceVector(Vec<f64>);

impl DistanceVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }
}

/// d̄_i for every element of the batch.
///
/// If the batch-mean distance is below [`DEGENERATE_MEAN`] every entry is 1,
/// which maps to the kernel's mean-distance τ.
pub fn normalized_distances(points: &Matrix, permutation: &Permutation) -> Result<DistanceVector> {
    let n = points.rows();
    if n == 0 || points.cols() == 0 {
        return Err(Error::usage(
            "distances need at least one point of dimension ≥ 1",
        ));
    }
    if permutation.len() != n {
        return Err(Error::usage(format!(
            "permutation over {} indices for a batch of {n}",
            permutation.len()
        )));
    }
    let raw: Vec<f64> = permutation
        .indices()
        .iter()
        .enumerate()
        .map(|(i, &j)| squared_distance(points.row(i), points.row(j)))
        .collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    if !mean.is_finite() {
        return Err(Error::domain(
            "normalized_distances",
            "non-finite distances",
        ));
    }
    if mean < DEGENERATE_MEAN {
        return Ok(DistanceVector(vec![1.0; n]));
    }
    Ok(DistanceVector(raw.into_iter().map(|d| d / mean).collect()))
}

/// τ for one normalized distance, clamped to `[1e-4, 1e6]`.
pub fn kernel_tau(dbar: f64, config: &KernelConfig) -> Result<f64> {
    if !dbar.is_finite() || dbar < 0.0 {
        return Err(Error::domain(
            "kernel_tau",
            format!("distance must be finite and non-negative, got {dbar}"),
        ));
    }
    let exponent = (dbar - 1.0) / (2.0 * config.tau_std * config.tau_std);
    let tau = exponent.exp() / config.tau_max;
    let clamped = if tau.is_nan() {
        SHAPE_MAX
    } else {
        tau.clamp(SHAPE_MIN, SHAPE_MAX)
    };
    if clamped != tau {
        log::debug!("kernel tau {tau} clamped to {clamped} (dbar = {dbar})");
    }
    Ok(clamped)
}

/// Warping parameters for every pair of the batch.
pub fn batch_taus(
    features: &Matrix,
    permutation: &Permutation,
    config: &KernelConfig,
) -> Result<Vec<WarpParam>> {
    config.validate()?;
    normalized_distances(features, permutation)?
        .values()
        .iter()
        .map(|&d| WarpParam::finite(kernel_tau(d, config)?))
        .collect()
}

/// The vectors distances are measured over for a given backend.
pub fn extract_features(batch: &Batch, backend: Backend, model: Option<&Mlp>) -> Result<Matrix> {
    match backend {
        Backend::RawInput => Ok(batch.inputs.clone()),
        Backend::Label => match &batch.targets {
            Targets::Values(y) => Ok(y.clone()),
            Targets::Classes { .. } => {
                Err(Error::usage("the label backend needs regression targets"))
            }
        },
        Backend::Embedding => {
            let model = model.ok_or_else(|| Error::usage("the embedding backend needs a model"))?;
            model.embed(&batch.inputs)
        }
        Backend::ClassWeight => {
            let model =
                model.ok_or_else(|| Error::usage("the class_weight backend needs a model"))?;
            let labels = match &batch.targets {
                Targets::Classes { labels, .. } => labels,
                Targets::Values(_) => {
                    return Err(Error::usage(
                        "the class_weight backend needs classification targets",
                    ))
                }
            };
            let head = &model.layers()[model.layers().len() - 1].weights;
            if let Some(&bad) = labels.iter().find(|&&y| y >= head.rows()) {
                return Err(Error::usage(format!(
                    "label {bad} has no weight row in a head with {} outputs",
                    head.rows()
                )));
            }
            Ok(head.select_rows(labels))
        }
    }
}
