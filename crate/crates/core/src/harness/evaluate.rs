//! Test-set evaluation and exported predictions.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{temperature_scale, ClassifPrediction, MetricReport, PredictiveDistribution};
use crate::mixer::Targets;
use crate::model::{mc_dropout_predict, Mlp};
use crate::special::RngStream;

use super::config::EvalConfig;
use super::split::Splits;
use super::train::streams;

/// Per-row test predictions, enough to recompute every metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum Predictions {
    /// MC-dropout moments in data units.
    Regression {
        num_bins: usize,
        predictions: Vec<PredictiveDistribution>,
    },
    /// Probabilities after temperature scaling.
    Classification {
        num_bins: usize,
        temperature: f64,
        predictions: Vec<ClassifPrediction>,
    },
}

impl Predictions {
    pub fn metrics(&self) -> Result<MetricReport> {
        match self {
            Predictions::Regression {
                num_bins,
                predictions,
            } => MetricReport::regression(predictions, *num_bins),
            Predictions::Classification {
                num_bins,
                temperature,
                predictions,
            } => {
                let mut r = MetricReport::classification(predictions, *num_bins)?;
                r.insert("temperature", *temperature);
                Ok(r)
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        super::train::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Evaluates a trained model on the test split.
///
/// Regression: MC-dropout moments on the test inputs, mapped back to data
/// units, then RMSE, MAPE, UCE and ENCE. Classification: a temperature
/// fitted on the validation split (if enabled), then accuracy, NLL, Brier
/// and ECE on the test split. Test rows are never used for fitting.
pub fn evaluate(
    model: &Mlp,
    splits: &Splits,
    eval: &EvalConfig,
    seed: u64,
) -> Result<(MetricReport, Predictions)> {
    let preds = predict_test(model, splits, eval, seed)?;
    Ok((preds.metrics()?, preds))
}

pub fn predict_test(
    model: &Mlp,
    splits: &Splits,
    eval: &EvalConfig,
    seed: u64,
) -> Result<Predictions> {
    match &splits.test_targets_raw {
        Targets::Values(y) => {
            if model.output_dim() != 1 || y.cols() != 1 {
                return Err(Error::usage(
                    "regression evaluation needs a scalar target and a scalar-output model",
                ));
            }
            let mut rng = RngStream::new(seed).split(streams::EVAL);
            let moments =
                mc_dropout_predict(model, &splits.test.inputs, eval.mc_samples, &mut rng)?;
            let norm = &splits.normalization;
            let predictions = moments
                .iter()
                .zip(y.as_slice())
                .map(|(m, &t)| {
                    PredictiveDistribution::new(
                        norm.denormalize_mean(0, m.mean),
                        norm.denormalize_variance(0, m.variance),
                        t,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Predictions::Regression {
                num_bins: eval.num_bins,
                predictions,
            })
        }
        Targets::Classes {
            labels,
            num_classes,
        } => {
            if model.output_dim() != *num_classes {
                return Err(Error::usage(format!(
                    "model has {} outputs for {num_classes} classes",
                    model.output_dim()
                )));
            }
            let temperature = if eval.temperature_scaling {
                let Targets::Classes { labels: vl, .. } = &splits.valid.targets else {
                    return Err(Error::usage("validation targets are not classes"));
                };
                temperature_scale(&model.predict(&splits.valid.inputs)?, vl)?
            } else {
                1.0
            };
            let logits = model.predict(&splits.test.inputs)?;
            let predictions = logits
                .iter_rows()
                .zip(labels)
                .map(|(z, &y)| ClassifPrediction::from_logits(z, y, temperature))
                .collect::<Result<Vec<_>>>()?;
            Ok(Predictions::Classification {
                num_bins: eval.num_bins,
                temperature,
                predictions,
            })
        }
    }
}
