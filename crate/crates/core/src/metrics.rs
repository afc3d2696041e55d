//! Point and calibration metrics for classifiers and regressors, and
//! temperature scaling.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mixer::log_softmax;

/// Lower clamp on probabilities inside [`nll`].
pub const NLL_PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifPrediction {
    pub probs: Vec<f64>,
    pub label: usize,
}

impl ClassifPrediction {
    pub fn new(probs: Vec<f64>, label: usize) -> Result<Self> {
        if probs.is_empty() || label >= probs.len() {
            return Err(Error::usage(format!(
                "label {label} out of range for {} classes",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::usage("probabilities must lie in [0, 1]"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::usage(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self { probs, label })
    }

    /// Softmax of `logits / temperature`.
    pub fn from_logits(logits: &[f64], label: usize, temperature: f64) -> Result<Self> {
        Self::new(softmax(logits, temperature), label)
    }

    pub fn confidence(&self) -> f64 {
        self.probs[self.predicted_class()]
    }

    /// Arg-max class; the lowest index wins ties.
    pub fn predicted_class(&self) -> usize {
        argmax(&self.probs)
    }

    pub fn is_correct(&self) -> bool {
        self.predicted_class() == self.label
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveDistribution {
    pub mean: f64,
    pub variance: f64,
    pub target: f64,
}

impl PredictiveDistribution {
    pub fn new(mean: f64, variance: f64, target: f64) -> Result<Self> {
        if variance.is_nan() || variance < 0.0 {
            return Err(Error::usage(format!(
                "variance must be ≥ 0, got {variance}"
            )));
        }
        Ok(Self {
            mean,
            variance,
            target,
        })
    }

    pub fn squared_error(&self) -> f64 {
        (self.mean - self.target).powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinScheme {
    EqualWidthConfidence,
    EqualWidthVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinningConfig {
    pub num_bins: usize,
    pub scheme: BinScheme,
}

impl BinningConfig {
    pub const DEFAULT_BINS: usize = 15;

    pub fn confidence(num_bins: usize) -> Self {
        Self {
            num_bins,
            scheme: BinScheme::EqualWidthConfidence,
        }
    }

    pub fn variance(num_bins: usize) -> Self {
        Self {
            num_bins,
            scheme: BinScheme::EqualWidthVariance,
        }
    }

    fn check(&self, want: BinScheme) -> Result<()> {
        if self.num_bins == 0 {
            return Err(Error::usage("need at least one bin"));
        }
        if self.scheme != want {
            return Err(Error::usage(format!(
                "{want:?} binning required, got {:?}",
                self.scheme
            )));
        }
        Ok(())
    }
}

/// Bin index of `v` among `m` equal-width bins on `[lo, hi]`: the largest k
/// with `v ≥ lo + (hi − lo)·k/m`, capped at `m − 1`. Values on an inner edge
/// go to the higher bin; `hi` itself lands in the last bin.
fn bin_index(v: f64, lo: f64, hi: f64, m: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    let edge = |k: usize| lo + (hi - lo) * k as f64 / m as f64;
    let mut k = (((v - lo) / (hi - lo)) * m as f64).floor().max(0.0) as usize;
    k = k.min(m - 1);
    while k + 1 < m && v >= edge(k + 1) {
        k += 1;
    }
    while k > 0 && v < edge(k) {
        k -= 1;
    }
    k
}

/// One row of a reliability table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub accuracy: f64,
    pub confidence: f64,
}

/// Equal-width confidence bins on [0, 1]. Empty bins have zero accuracy and
/// confidence.
pub fn confidence_bins(
    preds: &[ClassifPrediction],
    bins: BinningConfig,
) -> Result<Vec<ConfidenceBin>> {
    bins.check(BinScheme::EqualWidthConfidence)?;
    non_empty(preds.len(), "confidence_bins")?;
    let m = bins.num_bins;
    let mut count = vec![0usize; m];
    let mut correct = vec![0.0; m];
    let mut conf = vec![0.0; m];
    for p in preds {
        let c = p.confidence();
        let k = bin_index(c, 0.0, 1.0, m);
        count[k] += 1;
        conf[k] += c;
        if p.is_correct() {
            correct[k] += 1.0;
        }
    }
    Ok((0..m)
        .map(|k| {
            let n = count[k] as f64;
            ConfidenceBin {
                lower: k as f64 / m as f64,
                upper: (k + 1) as f64 / m as f64,
                count: count[k],
                accuracy: if count[k] > 0 { correct[k] / n } else { 0.0 },
                confidence: if count[k] > 0 { conf[k] / n } else { 0.0 },
            }
        })
        .collect())
}

/// Expected calibration error, `Σ_m (|B_m|/N)·|acc(B_m) − conf(B_m)|`.
pub fn ece(preds: &[ClassifPrediction], bins: BinningConfig) -> Result<f64> {
    let n = preds.len() as f64;
    Ok(confidence_bins(preds, bins)?
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| b.count as f64 / n * (b.accuracy - b.confidence).abs())
        .sum())
}

/// Multi-class Brier score `(1/N) Σ_i Σ_j (p̂_ij − y_ij)²`, in [0, 2].
pub fn brier(preds: &[ClassifPrediction]) -> Result<f64> {
    non_empty(preds.len(), "brier")?;
    let total: f64 = preds
        .iter()
        .map(|p| {
            p.probs
                .iter()
                .enumerate()
                .map(|(j, &q)| {
                    let y = if j == p.label { 1.0 } else { 0.0 };
                    (q - y).powi(2)
                })
                .sum::<f64>()
        })
        .sum();
    Ok(total / preds.len() as f64)
}

/// Mean negative log-likelihood of the labels, with probabilities clamped
/// below at [`NLL_PROB_FLOOR`].
pub fn nll(preds: &[ClassifPrediction]) -> Result<f64> {
    non_empty(preds.len(), "nll")?;
    let total: f64 = preds
        .iter()
        .map(|p| -p.probs[p.label].clamp(NLL_PROB_FLOOR, 1.0).ln())
        .sum();
    Ok(total / preds.len() as f64)
}

pub fn accuracy(preds: &[ClassifPrediction]) -> Result<f64> {
    non_empty(preds.len(), "accuracy")?;
    Ok(preds.iter().filter(|p| p.is_correct()).count() as f64 / preds.len() as f64)
}

/// One bin of a variance-binned regression table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mse: f64,
    pub mean_variance: f64,
}

/// Equal-width bins over `[min σ², max σ²]`. When all variances coincide
/// every sample falls in the first bin.
pub fn variance_bins(
    preds: &[PredictiveDistribution],
    bins: BinningConfig,
) -> Result<Vec<VarianceBin>> {
    bins.check(BinScheme::EqualWidthVariance)?;
    non_empty(preds.len(), "variance_bins")?;
    let m = bins.num_bins;
    let lo = preds
        .iter()
        .map(|p| p.variance)
        .fold(f64::INFINITY, f64::min);
    let hi = preds
        .iter()
        .map(|p| p.variance)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut count = vec![0usize; m];
    let mut se = vec![0.0; m];
    let mut var = vec![0.0; m];
    for p in preds {
        let k = bin_index(p.variance, lo, hi, m);
        count[k] += 1;
        se[k] += p.squared_error();
        var[k] += p.variance;
    }
    Ok((0..m)
        .map(|k| {
            let n = count[k] as f64;
            VarianceBin {
                lower: lo + (hi - lo) * k as f64 / m as f64,
                upper: lo + (hi - lo) * (k + 1) as f64 / m as f64,
                count: count[k],
                mse: if count[k] > 0 { se[k] / n } else { 0.0 },
                mean_variance: if count[k] > 0 { var[k] / n } else { 0.0 },
            }
        })
        .collect())
}

/// Uncertainty calibration error, `Σ_m (|B_m|/N)·|MSE(B_m) − MV(B_m)|`.
pub fn uce(preds: &[PredictiveDistribution], bins: BinningConfig) -> Result<f64> {
    let n = preds.len() as f64;
    Ok(variance_bins(preds, bins)?
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| b.count as f64 / n * (b.mse - b.mean_variance).abs())
        .sum())
}

/// Expected normalized calibration error, the mean over non-empty bins of
/// `|RMSE(B_m) − RMV(B_m)| / RMV(B_m)`.
///
/// A bin with zero RMV and positive RMSE makes the result `+∞`; a bin where
/// both are zero contributes 0.
pub fn ence(preds: &[PredictiveDistribution], bins: BinningConfig) -> Result<f64> {
    let table = variance_bins(preds, bins)?;
    let used: Vec<_> = table.iter().filter(|b| b.count > 0).collect();
    let total: f64 = used
        .iter()
        .map(|b| {
            let rmse = b.mse.sqrt();
            let rmv = b.mean_variance.sqrt();
            if rmv > 0.0 {
                (rmse - rmv).abs() / rmv
            } else if rmse > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum();
    Ok(total / used.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics {
    pub rmse: f64,
    /// Percent; absent when some target is zero.
    pub mape: Option<f64>,
}

pub fn regression_point_metrics(preds: &[PredictiveDistribution]) -> Result<PointMetrics> {
    non_empty(preds.len(), "regression_point_metrics")?;
    let n = preds.len() as f64;
    let rmse = (preds.iter().map(|p| p.squared_error()).sum::<f64>() / n).sqrt();
    let mape = if preds.iter().any(|p| p.target == 0.0) {
        None
    } else {
        Some(
            100.0
                * preds
                    .iter()
                    .map(|p| ((p.mean - p.target) / p.target).abs())
                    .sum::<f64>()
                / n,
        )
    };
    Ok(PointMetrics { rmse, mape })
}

/// Softmax of `logits / temperature`.
pub fn softmax(logits: &[f64], temperature: f64) -> Vec<f64> {
    let scaled: Vec<f64> = logits.iter().map(|z| z / temperature).collect();
    log_softmax(&scaled).into_iter().map(f64::exp).collect()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub const TEMPERATURE_MIN: f64 = 0.05;
pub const TEMPERATURE_MAX: f64 = 20.0;
const TEMPERATURE_GRID: usize = 200;
const TEMPERATURE_RTOL: f64 = 1e-4;

/// Mean NLL of `softmax(logits / t)`.
pub fn temperature_nll(logits: &Matrix, labels: &[usize], t: f64) -> f64 {
    let total: f64 = logits
        .iter_rows()
        .zip(labels)
        .map(|(z, &y)| {
            let scaled: Vec<f64> = z.iter().map(|v| v / t).collect();
            -log_softmax(&scaled)[y]
        })
        .sum();
    total / labels.len() as f64
}

/// Temperature minimizing the NLL: a geometric grid search over
/// [0.05, 20] refined by golden-section search.
pub fn temperature_scale(logits: &Matrix, labels: &[usize]) -> Result<f64> {
    non_empty(labels.len(), "temperature_scale")?;
    if logits.rows() != labels.len() || logits.cols() == 0 {
        return Err(Error::usage(format!(
            "{} logit rows for {} labels",
            logits.rows(),
            labels.len()
        )));
    }
    if labels.iter().any(|&y| y >= logits.cols()) {
        return Err(Error::usage("label out of range for the logits"));
    }
    let f = |t: f64| temperature_nll(logits, labels, t);
    let ratio = (TEMPERATURE_MAX / TEMPERATURE_MIN).ln() / (TEMPERATURE_GRID - 1) as f64;
    let grid: Vec<f64> = (0..TEMPERATURE_GRID)
        .map(|k| TEMPERATURE_MIN * (ratio * k as f64).exp())
        .collect();
    let values: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let best = argmin(&values);

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(TEMPERATURE_GRID - 1)];
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > TEMPERATURE_RTOL * 0.5 * (a + b) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let refined = 0.5 * (a + b);
    // never return something worse than the grid point
    Ok(if f(refined) <= values[best] {
        refined
    } else {
        grid[best]
    })
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

fn non_empty(n: usize, op: &str) -> Result<()> {
    if n == 0 {
        Err(Error::usage(format!("{op} needs at least one prediction")))
    } else {
        Ok(())
    }
}

/// Flat metric record: metric name to value, next to an echo of the
/// configuration that produced it. Non-finite values serialize as `null`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(flatten)]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub config: serde_json::Value,
}

impl MetricReport {
    pub fn insert(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    /// RMSE, MAPE, UCE and ENCE for a regressor.
    pub fn regression(preds: &[PredictiveDistribution], num_bins: usize) -> Result<Self> {
        let mut r = Self::default();
        let point = regression_point_metrics(preds)?;
        r.insert("rmse", point.rmse);
        if let Some(m) = point.mape {
            r.insert("mape", m);
        }
        r.insert("uce", uce(preds, BinningConfig::variance(num_bins))?);
        r.insert("ence", ence(preds, BinningConfig::variance(num_bins))?);
        Ok(r)
    }

    /// Accuracy, NLL, Brier and ECE for a classifier.
    pub fn classification(preds: &[ClassifPrediction], num_bins: usize) -> Result<Self> {
        let mut r = Self::default();
        r.insert("accuracy", accuracy(preds)?);
        r.insert("nll", nll(preds)?);
        r.insert("brier", brier(preds)?);
        r.insert("ece", ece(preds, BinningConfig::confidence(num_bins))?);
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cp(probs: &[f64], label: usize) -> ClassifPrediction {
        ClassifPrediction::new(probs.to_vec(), label).unwrap()
    }

    fn pd(mean: f64, variance: f64, target: f64) -> PredictiveDistribution {
        PredictiveDistribution::new(mean, variance, target).unwrap()
    }

    #[test]
    fn bin_edges() {
        assert_eq!(bin_index(0.5, 0.0, 1.0, 2), 1);
        assert_eq!(bin_index(1.0, 0.0, 1.0, 15), 14);
        assert_eq!(bin_index(0.0, 0.0, 1.0, 15), 0);
        // 0.2 is an edge for M=5 even though 0.2·5 is not exactly 1
        assert_eq!(bin_index(0.2, 0.0, 1.0, 5), 1);
        assert_eq!(bin_index(0.6, 0.0, 1.0, 5), 3);
        for m in 1..40 {
            for k in 0..m {
                let e = k as f64 / m as f64;
                assert_eq!(bin_index(e, 0.0, 1.0, m), k, "m={m} k={k}");
            }
        }
        assert_eq!(bin_index(3.0, 3.0, 3.0, 4), 0);
    }

    #[test]
    fn ece_examples() {
        let bins = BinningConfig::confidence(15);
        let all_right = vec![cp(&[1.0, 0.0], 0); 4];
        assert_eq!(ece(&all_right, bins).unwrap(), 0.0);
        let all_wrong = vec![cp(&[0.0, 1.0], 0); 4];
        assert_eq!(ece(&all_wrong, bins).unwrap(), 1.0);

        let preds = [
            cp(&[0.9, 0.05, 0.05, 0.0], 0),
            cp(&[0.8, 0.1, 0.1, 0.0], 1),
            cp(&[0.3, 0.25, 0.25, 0.2], 0),
            cp(&[0.4, 0.3, 0.3, 0.0], 0),
        ];
        let v = ece(&preds, BinningConfig::confidence(2)).unwrap();
        assert!((v - 0.5).abs() < 1e-15, "{v}");
    }

    #[test]
    fn brier_examples() {
        assert_eq!(brier(&[cp(&[0.0, 1.0, 0.0], 1)]).unwrap(), 0.0);
        assert_eq!(brier(&[cp(&[0.5, 0.5], 0)]).unwrap(), 0.5);
        assert_eq!(brier(&[cp(&[0.0, 0.0, 1.0, 0.0], 0)]).unwrap(), 2.0);
    }

    #[test]
    fn nll_examples() {
        assert_eq!(nll(&[cp(&[1.0, 0.0], 0)]).unwrap(), 0.0);
        assert!((nll(&[cp(&[0.5, 0.5], 1)]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        let v = nll(&[cp(&[0.9, 0.1], 0), cp(&[0.2, 0.8], 1)]).unwrap();
        assert!((v - 0.164_252).abs() < 1e-6);
        // clamped
        let v = nll(&[cp(&[1.0, 0.0], 1)]).unwrap();
        assert!((v - 1e12f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn uce_examples() {
        let b1 = BinningConfig::variance(1);
        let exact = [pd(1.0, 4.0, 3.0), pd(0.0, 1.0, 1.0)];
        assert_eq!(uce(&exact, BinningConfig::variance(15)).unwrap(), 0.0);
        let v = uce(&[pd(1.0, 2.0, 0.0), pd(3f64.sqrt(), 2.0, 0.0)], b1).unwrap();
        assert!(v.abs() < 1e-15);
        let v = uce(&[pd(1.0, 4.0, 0.0), pd(-1.0, 2.0, 0.0)], b1).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn ence_examples() {
        let b1 = BinningConfig::variance(1);
        let v = ence(&[pd(2.0, 1.0, 0.0), pd(-2.0, 1.0, 0.0)], b1).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let v = ence(&[pd(1.0, 1.0, 0.0), pd(1.0, 1.0, 0.0)], b1).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(ence(&[pd(1.0, 0.0, 0.0)], b1).unwrap(), f64::INFINITY);
        assert_eq!(ence(&[pd(1.0, 0.0, 1.0)], b1).unwrap(), 0.0);
    }

    #[test]
    fn ence_skips_empty_bins() {
        // variances 1 and 4 land in bins 0 and 14; 13 empty bins are ignored
        let preds = [pd(2.0, 1.0, 0.0), pd(2.0, 4.0, 0.0)];
        let v = ence(&preds, BinningConfig::variance(15)).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn point_metric_examples() {
        let m = regression_point_metrics(&[pd(1.0, 0.0, 1.0), pd(2.0, 0.0, 2.0)]).unwrap();
        assert_eq!((m.rmse, m.mape), (0.0, Some(0.0)));
        let m = regression_point_metrics(&[pd(2.0, 0.0, 1.0), pd(4.0, 0.0, 2.0)]).unwrap();
        assert!((m.rmse - 2.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.mape, Some(100.0));
        let m = regression_point_metrics(&[pd(2.0, 0.0, 1.0); 3]).unwrap();
        assert_eq!((m.rmse, m.mape), (1.0, Some(100.0)));
        let m = regression_point_metrics(&[pd(1.0, 0.0, 0.0), pd(1.0, 0.0, 2.0)]).unwrap();
        assert_eq!(m.mape, None);
        assert!((m.rmse - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_inputs_are_usage_errors() {
        assert!(matches!(
            ece(&[], BinningConfig::confidence(15)),
            Err(Error::Usage(_))
        ));
        assert!(brier(&[]).is_err());
        assert!(nll(&[]).is_err());
        assert!(uce(&[], BinningConfig::variance(3)).is_err());
        assert!(ence(&[], BinningConfig::variance(3)).is_err());
        assert!(regression_point_metrics(&[]).is_err());
        assert!(ece(&[cp(&[1.0], 0)], BinningConfig::variance(3)).is_err());
        assert!(ece(&[cp(&[1.0], 0)], BinningConfig::confidence(0)).is_err());
    }

    #[test]
    fn prediction_validation() {
        assert!(ClassifPrediction::new(vec![0.5, 0.6], 0).is_err());
        assert!(ClassifPrediction::new(vec![0.5, 0.5], 2).is_err());
        assert!(PredictiveDistribution::new(0.0, -1.0, 0.0).is_err());
    }

    fn toy_logits() -> (Matrix, Vec<usize>) {
        let mut rng = crate::special::RngStream::new(77);
        let (n, c) = (300, 4);
        let mut data = Vec::with_capacity(n * c);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let y = rng.below(c);
            for k in 0..c {
                let signal = if k == y { 1.5 } else { 0.0 };
                data.push(3.0 * (signal + rng.standard_normal()));
            }
            labels.push(y);
        }
        (Matrix::from_vec(n, c, data).unwrap(), labels)
    }

    #[test]
    fn temperature_is_stationary_after_rescaling() {
        let (logits, labels) = toy_logits();
        let t = temperature_scale(&logits, &labels).unwrap();
        assert!(t > 1.0, "overconfident logits should be softened, got {t}");
        let mut pre = logits.clone();
        pre.map_inplace(|z| z / t);
        let t1 = temperature_scale(&pre, &labels).unwrap();
        assert!((t1 - 1.0).abs() < 1e-3, "{t1}");
    }

    #[test]
    fn temperature_scales_with_logits() {
        let (logits, labels) = toy_logits();
        let mut half = logits.clone();
        half.map_inplace(|z| z / 3.0);
        let t = temperature_scale(&half, &labels).unwrap();
        let mut double = half.clone();
        double.map_inplace(|z| 2.0 * z);
        let t2 = temperature_scale(&double, &labels).unwrap();
        assert!((t2 / t - 2.0).abs() < 2e-3, "{t} {t2}");
    }

    #[test]
    fn temperature_keeps_predicted_classes() {
        let (logits, labels) = toy_logits();
        let t = temperature_scale(&logits, &labels).unwrap();
        for (z, &y) in logits.iter_rows().zip(&labels) {
            let p = ClassifPrediction::from_logits(z, y, t).unwrap();
            assert_eq!(p.predicted_class(), argmax(z));
        }
        assert!(temperature_scale(&logits, &labels[..3]).is_err());
    }

    #[test]
    fn report_is_flat_json() {
        let r = MetricReport::regression(&[pd(2.0, 1.0, 1.0), pd(4.0, 2.0, 2.0)], 15).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert!(v["rmse"].is_f64());
        assert!(v["uce"].is_f64());
        assert!(v.get("config").is_none());
    }
}
