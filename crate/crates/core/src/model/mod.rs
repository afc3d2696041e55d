//! A small fully connected network trained with hand-written backprop.

mod mlp;
mod optim;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use mlp::{Activation, Dense, ForwardCache, Gradients, LayerGrad, Mlp, Mode, ModelSpec};
pub use optim::{Optimizer, OptimizerKind};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::special::RngStream;

/// Monte-Carlo predictive mean and variance for one scalar output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveMoments {
    pub mean: f64,
    pub variance: f64,
}

/// MC dropout: `samples` stochastic passes with dropout active, summarised
/// per input by the sample mean and the unbiased sample variance.
pub fn mc_dropout_predict(
    model: &Mlp,
    inputs: &Matrix,
    samples: usize,
    rng: &mut RngStream,
) -> Result<Vec<PredictiveMoments>> {
    if samples < 2 {
        return Err(Error::usage(format!(
            "MC dropout needs at least 2 samples, got {samples}"
        )));
    }
    if model.dropout_rate() <= 0.0 {
        return Err(Error::usage("MC dropout needs a positive dropout rate"));
    }
    if model.output_dim() != 1 {
        return Err(Error::usage(format!(
            "MC dropout predicts scalar outputs, network has {}",
            model.output_dim()
        )));
    }
    // Welford accumulators per input row
    let n = inputs.rows();
    let mut mean = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    for k in 0..samples {
        let out = model.predict_stochastic(inputs, rng)?;
        let count = (k + 1) as f64;
        for (i, &y) in out.as_slice().iter().enumerate() {
            let delta = y - mean[i];
            mean[i] += delta / count;
            m2[i] += delta * (y - mean[i]);
        }
    }
    Ok(mean
        .into_iter()
        .zip(m2)
        .map(|(mean, m2)| PredictiveMoments {
            mean,
            variance: (m2 / (samples - 1) as f64).max(0.0),
        })
        .collect())
}

/// On-disk model checkpoint (JSON).
///
/// Layout: `{"format": "kwmix-mlp-v1", "seed": <u64 or null>, "model":
/// {"layers": [{"weights": {"rows", "cols", "data"}, "bias": [..],
/// "activation": "relu" | "identity"}, ..], "dropout_rate", "mode"}}`.
/// Weights are row-major with one row per output unit. Floats are written in
/// shortest round-trip form, so a reload is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub seed: Option<u64>,
    pub model: Mlp,
}

pub const CHECKPOINT_FORMAT: &str = "kwmix-mlp-v1";

impl Checkpoint {
    pub fn new(model: Mlp, seed: Option<u64>) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            seed,
            model,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let ck: Checkpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Config(format!(
                "unsupported checkpoint format {:?}",
                ck.format
            )));
        }
        // re-validate layer chaining and finiteness
        let model = Mlp::from_layers(ck.model.layers().to_vec(), ck.model.dropout_rate())?;
        Ok(Checkpoint { model, ..ck })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_chain(w: f64, v: f64, rate: f64) -> Mlp {
        let enc = Dense::new(
            Matrix::from_vec(1, 1, vec![w]).unwrap(),
            vec![0.0],
            Activation::Identity,
        )
        .unwrap();
        let head = Dense::new(
            Matrix::from_vec(1, 1, vec![v]).unwrap(),
            vec![0.0],
            Activation::Identity,
        )
        .unwrap();
        Mlp::from_layers(vec![enc, head], rate).unwrap()
    }

    #[test]
    fn zero_network_has_zero_moments() {
        let m = linear_chain(0.0, 0.0, 0.3);
        let out = mc_dropout_predict(&m, &Matrix::column(&[1.0, 2.0]), 10, &mut RngStream::new(0))
            .unwrap();
        assert!(out.iter().all(|p| p.mean == 0.0 && p.variance == 0.0));
    }

    #[test]
    fn bias_only_output_has_zero_variance() {
        let enc = Dense::new(Matrix::zeros(3, 2), vec![0.0; 3], Activation::Relu).unwrap();
        let head = Dense::new(Matrix::zeros(1, 3), vec![1.25], Activation::Identity).unwrap();
        let m = Mlp::from_layers(vec![enc, head], 0.5).unwrap();
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, -4.0]]).unwrap();
        let out = mc_dropout_predict(&m, &x, 20, &mut RngStream::new(1)).unwrap();
        for p in out {
            assert_eq!(p.mean, 1.25);
            assert_eq!(p.variance, 0.0);
        }
    }

    #[test]
    fn single_unit_bernoulli_closed_form() {
        // output = v · (w x) · mask / p, mask ~ Bernoulli(p)
        let (w, v, x, rate) = (1.5, -2.0, 0.8, 0.2);
        let p = 1.0 - rate;
        let m = linear_chain(w, v, rate);
        let samples = 10_000;
        let out = mc_dropout_predict(&m, &Matrix::column(&[x]), samples, &mut RngStream::new(5))
            .unwrap()[0];
        let mean = w * x * v;
        let var = v * v * (w * x) * (w * x) * (1.0 - p) / p;
        let se_mean = (var / samples as f64).sqrt();
        assert!(
            (out.mean - mean).abs() < 3.0 * se_mean,
            "{} vs {mean}",
            out.mean
        );
        // output takes two values; the sample variance has sd ≈ var·sqrt((κ−1)/n)
        // with kurtosis κ = 1/(p(1−p)) − 3 for a two-point law
        let kurt = 1.0 / (p * (1.0 - p)) - 3.0;
        let se_var = var * ((kurt - 1.0) / samples as f64).sqrt();
        assert!(
            (out.variance - var).abs() < 3.0 * se_var,
            "{} vs {var}",
            out.variance
        );
    }

    #[test]
    fn requires_two_samples_and_dropout() {
        let m = linear_chain(1.0, 1.0, 0.2);
        let x = Matrix::column(&[1.0]);
        assert!(mc_dropout_predict(&m, &x, 1, &mut RngStream::new(0)).is_err());
        let m0 = linear_chain(1.0, 1.0, 0.0);
        assert!(mc_dropout_predict(&m0, &x, 5, &mut RngStream::new(0)).is_err());
    }

    #[test]
    fn checkpoint_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        let m = Mlp::init(&ModelSpec::default(), 4, 1, &mut RngStream::new(8)).unwrap();
        Checkpoint::new(m.clone(), Some(8)).save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back.model, m);
        assert_eq!(back.seed, Some(8));
    }
}
