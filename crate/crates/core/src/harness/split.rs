//! Seeded train/validation/test partitions and train-only normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mixer::{sample_permutation, Batch, Targets};
use crate::special::RngStream;

use super::data::Dataset;

/// Standard deviations are floored here before dividing.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.6,
            valid: 0.2,
            test: 0.2,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let f = [self.train, self.valid, self.test];
        if f.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::usage(format!(
                "split fractions must be ≥ 0, got {f:?}"
            )));
        }
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::usage(format!(
                "split fractions must sum to 1, got {f:?}"
            )));
        }
        Ok(())
    }

    /// Sizes `(train, valid, test)` for `n` rows: validation and test sizes
    /// are `floor(f·n)`, the remainder goes to training. Every part must be
    /// non-empty.
    pub fn sizes(&self, n: usize) -> Result<(usize, usize, usize)> {
        self.validate()?;
        // the small slack keeps 0.2·10 from flooring to 1
        let part = |f: f64| ((f * n as f64) + 1e-9).floor() as usize;
        let valid = part(self.valid);
        let test = part(self.test);
        if valid + test >= n || valid == 0 || test == 0 {
            return Err(Error::usage(format!(
                "split {:?} of {n} rows leaves an empty part",
                (self.train, self.valid, self.test)
            )));
        }
        Ok((n - valid - test, valid, test))
    }
}

/// Per-column affine maps fitted on the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    /// Empty for classification targets.
    pub target_mean: Vec<f64>,
    pub target_std: Vec<f64>,
}

fn column_stats(m: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.rows() as f64;
    let mut mean = vec![0.0; m.cols()];
    for r in m.iter_rows() {
        for (acc, v) in mean.iter_mut().zip(r) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n);
    let mut var = vec![0.0; m.cols()];
    for r in m.iter_rows() {
        for ((acc, v), mu) in var.iter_mut().zip(r).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    let std = var
        .into_iter()
        .map(|v| (v / n).sqrt().max(STD_FLOOR))
        .collect();
    (mean, std)
}

fn standardize(m: &Matrix, mean: &[f64], std: &[f64]) -> Matrix {
    let mut out = m.clone();
    for i in 0..out.rows() {
        for ((v, mu), s) in out.row_mut(i).iter_mut().zip(mean).zip(std) {
            *v = (*v - mu) / s;
        }
    }
    out
}

impl Normalization {
    /// Fits on training rows only. Population standard deviation, floored
    /// at [`STD_FLOOR`].
    pub fn fit(train: &Dataset) -> Self {
        let (feature_mean, feature_std) = column_stats(&train.features);
        let (target_mean, target_std) = match &train.targets {
            Targets::Values(y) => column_stats(y),
            Targets::Classes { .. } => (Vec::new(), Vec::new()),
        };
        Self {
            feature_mean,
            feature_std,
            target_mean,
            target_std,
        }
    }

    pub fn features(&self, x: &Matrix) -> Matrix {
        standardize(x, &self.feature_mean, &self.feature_std)
    }

    pub fn targets(&self, t: &Targets) -> Targets {
        match t {
            Targets::Values(y) => {
                Targets::Values(standardize(y, &self.target_mean, &self.target_std))
            }
            c => c.clone(),
        }
    }

    /// Maps a normalized prediction of target column `k` back to data units.
    pub fn denormalize_mean(&self, k: usize, v: f64) -> f64 {
        v * self.target_std[k] + self.target_mean[k]
    }

    pub fn denormalize_variance(&self, k: usize, v: f64) -> f64 {
        v * self.target_std[k] * self.target_std[k]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

/// Normalized splits ready for training and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Batch,
    pub valid: Batch,
    pub test: Batch,
    /// Test targets in data units, for reporting.
    pub test_targets_raw: Targets,
    pub normalization: Normalization,
    pub indices: SplitIndices,
}

fn subset(d: &Dataset, idx: &[usize]) -> Dataset {
    Dataset {
        name: d.name.clone(),
        features: d.features.select_rows(idx),
        targets: d.targets.select(idx),
    }
}

/// Shuffles rows with `seed`, cuts them into train/valid/test and
/// normalizes all three with statistics from the training rows.
pub fn split(dataset: &Dataset, fractions: &SplitFractions, seed: u64) -> Result<Splits> {
    let n = dataset.len();
    let (n_train, n_valid, _) = fractions.sizes(n)?;
    let perm = sample_permutation(n, &mut RngStream::new(seed))?;
    let order = perm.indices();
    let indices = SplitIndices {
        train: order[..n_train].to_vec(),
        valid: order[n_train..n_train + n_valid].to_vec(),
        test: order[n_train + n_valid..].to_vec(),
    };
    let train = subset(dataset, &indices.train);
    let valid = subset(dataset, &indices.valid);
    let test = subset(dataset, &indices.test);
    let norm = Normalization::fit(&train);
    let to_batch = |d: &Dataset| Batch::new(norm.features(&d.features), norm.targets(&d.targets));
    Ok(Splits {
        train: to_batch(&train)?,
        valid: to_batch(&valid)?,
        test: to_batch(&test)?,
        test_targets_raw: test.targets.clone(),
        normalization: norm,
        indices,
    })
}
