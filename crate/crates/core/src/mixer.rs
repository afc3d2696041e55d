//! Batch-level mixup with optional kernel-warped coefficients.
//!
//! One permutation σ is drawn per batch and each sample i is paired with
//! σ(i). A raw coefficient λ_i ~ Beta(α, α) is warped separately for inputs
//! and targets:
//!
//! ```text
//! x̃_i = ω_{τ_in}(λ_i) x_i + (1 − ω_{τ_in}(λ_i)) x_σ(i)
//! ỹ_i = ω_{τ_out}(λ_i) y_i + (1 − ω_{τ_out}(λ_i)) y_σ(i)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::Mlp;
use crate::similarity::{batch_taus, extract_features, KernelConfig};
use crate::special::{beta_sample, RngStream};
use crate::warping::{warp_pairwise, WarpParam};

/// A bijection on `0..n`, stored as `σ(i)` for each `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        let n = indices.len();
        let mut seen = vec![false; n];
        for &j in &indices {
            if j >= n || seen[j] {
                return Err(Error::usage(format!(
                    "{indices:?} is not a permutation of 0..{n}"
                )));
            }
            seen[j] = true;
        }
        Ok(Self(indices))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Permutation::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

/// Uniform random permutation by Fisher-Yates.
pub fn sample_permutation(n: usize, rng: &mut RngStream) -> Result<Permutation> {
    if n == 0 {
        return Err(Error::usage("cannot permute an empty batch"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.below(i + 1);
        idx.swap(i, j);
    }
    Ok(Permutation(idx))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Targets {
    Classes {
        labels: Vec<usize>,
        num_classes: usize,
    },
    /// One row per sample.
    Values(Matrix),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes { labels, .. } => labels.len(),
            Targets::Values(m) => m.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, indices: &[usize]) -> Targets {
        match self {
            Targets::Classes {
                labels,
                num_classes,
            } => Targets::Classes {
                labels: indices.iter().map(|&i| labels[i]).collect(),
                num_classes: *num_classes,
            },
            Targets::Values(m) => Targets::Values(m.select_rows(indices)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub inputs: Matrix,
    pub targets: Targets,
}

impl Batch {
    pub fn new(inputs: Matrix, targets: Targets) -> Result<Self> {
        if inputs.rows() == 0 {
            return Err(Error::usage("a batch needs at least one sample"));
        }
        if inputs.cols() == 0 {
            return Err(Error::usage("inputs must have dimension at least 1"));
        }
        if targets.len() != inputs.rows() {
            return Err(Error::usage(format!(
                "{} inputs but {} targets",
                inputs.rows(),
                targets.len()
            )));
        }
        match &targets {
            Targets::Classes {
                labels,
                num_classes,
            } => {
                if let Some(&y) = labels.iter().find(|&&y| y >= *num_classes) {
                    return Err(Error::usage(format!(
                        "class index {y} out of range for {num_classes} classes"
                    )));
                }
            }
            Targets::Values(m) => {
                if m.cols() == 0 {
                    return Err(Error::usage("regression targets need dimension ≥ 1"));
                }
            }
        }
        Ok(Self { inputs, targets })
    }

    pub fn classification(inputs: Matrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        Self::new(
            inputs,
            Targets::Classes {
                labels,
                num_classes,
            },
        )
    }

    pub fn regression(inputs: Matrix, values: Matrix) -> Result<Self> {
        Self::new(inputs, Targets::Values(values))
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, indices: &[usize]) -> Batch {
        Batch {
            inputs: self.inputs.select_rows(indices),
            targets: self.targets.select(indices),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixMode {
    /// No augmentation.
    Off,
    /// Standard mixup, all τ = 1.
    Vanilla,
    /// τ from the similarity kernels.
    KernelWarped,
    /// Mix inputs only (τ_in = 1, τ_out = ∞).
    InputOnly,
    /// Mix targets only (τ_in = ∞, τ_out = 1).
    TargetOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixupConfig {
    pub alpha: f64,
    pub mode: MixMode,
    #[serde(default)]
    pub input_kernel: Option<KernelConfig>,
    #[serde(default)]
    pub output_kernel: Option<KernelConfig>,
    /// Draw a single λ per batch instead of one per sample.
    #[serde(default)]
    pub lambda_per_batch: bool,
}

impl MixupConfig {
    pub fn new(alpha: f64, mode: MixMode) -> Self {
        Self {
            alpha,
            mode,
            input_kernel: None,
            output_kernel: None,
            lambda_per_batch: false,
        }
    }

    pub fn kernel_warped(alpha: f64, input: KernelConfig, output: KernelConfig) -> Self {
        Self {
            alpha,
            mode: MixMode::KernelWarped,
            input_kernel: Some(input),
            output_kernel: Some(output),
            lambda_per_batch: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::usage(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        let has_kernels = (self.input_kernel.is_some(), self.output_kernel.is_some());
        match (self.mode, has_kernels) {
            (MixMode::KernelWarped, (true, true)) => {
                self.input_kernel.unwrap().validate()?;
                self.output_kernel.unwrap().validate()
            }
            (MixMode::KernelWarped, _) => Err(Error::usage(
                "kernel_warped mode needs both input_kernel and output_kernel",
            )),
            (_, (false, false)) => Ok(()),
            (mode, _) => Err(Error::usage(format!(
                "kernels are only used in kernel_warped mode, not {mode:?}"
            ))),
        }
    }

    /// Whether mixing reads the current model parameters.
    pub fn needs_model(&self) -> bool {
        self.mode == MixMode::KernelWarped
            && [self.input_kernel, self.output_kernel]
                .iter()
                .flatten()
                .any(|k| k.backend.needs_model())
    }
}

/// Everything needed to reproduce one augmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixPlan {
    pub permutation: Permutation,
    pub raw_lambdas: Vec<f64>,
    pub input_coeffs: Vec<f64>,
    pub target_coeffs: Vec<f64>,
    pub input_taus: Vec<WarpParam>,
    pub target_taus: Vec<WarpParam>,
}

impl MixPlan {
    /// Builds a plan, deriving the warped coefficients.
    pub fn new(
        permutation: Permutation,
        raw_lambdas: Vec<f64>,
        input_taus: Vec<WarpParam>,
        target_taus: Vec<WarpParam>,
    ) -> Result<Self> {
        let n = permutation.len();
        if raw_lambdas.len() != n || input_taus.len() != n || target_taus.len() != n {
            return Err(Error::usage(
                "plan components must all have the batch length",
            ));
        }
        let input_coeffs = warp_pairwise(&raw_lambdas, &input_taus)?;
        let target_coeffs = warp_pairwise(&raw_lambdas, &target_taus)?;
        Ok(Self {
            permutation,
            raw_lambdas,
            input_coeffs,
            target_coeffs,
            input_taus,
            target_taus,
        })
    }

    /// The plan of an unmixed batch: σ = id, every coefficient 1.
    pub fn identity(n: usize) -> Self {
        Self {
            permutation: Permutation::identity(n),
            raw_lambdas: vec![1.0; n],
            input_coeffs: vec![1.0; n],
            target_coeffs: vec![1.0; n],
            input_taus: vec![WarpParam::IDENTITY; n],
            target_taus: vec![WarpParam::IDENTITY; n],
        }
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }
}

/// An augmented batch. Targets are kept as pairs `(y_i, y_σ(i))` weighted by
/// the plan's target coefficients; regression targets can be materialized
/// with [`MixedBatch::mixed_values`].
#[derive(Debug, Clone, PartialEq)]
pub struct MixedBatch {
    pub inputs: Matrix,
    /// The original, unmixed targets.
    pub targets: Targets,
    pub plan: MixPlan,
}

impl MixedBatch {
    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(y_i, y_σ(i), c_i)` for a classification batch.
    pub fn class_pairs(&self) -> Option<Vec<(usize, usize, f64)>> {
        match &self.targets {
            Targets::Classes { labels, .. } => Some(
                self.plan
                    .permutation
                    .indices()
                    .iter()
                    .enumerate()
                    .map(|(i, &j)| (labels[i], labels[j], self.plan.target_coeffs[i]))
                    .collect(),
            ),
            Targets::Values(_) => None,
        }
    }

    /// ỹ for a regression batch.
    pub fn mixed_values(&self) -> Option<Matrix> {
        match &self.targets {
            Targets::Values(y) => Some(interpolate_rows(
                y,
                self.plan.permutation.indices(),
                &self.plan.target_coeffs,
            )),
            Targets::Classes { .. } => None,
        }
    }
}

fn interpolate_rows(m: &Matrix, partner: &[usize], coeffs: &[f64]) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for (i, (&j, &c)) in partner.iter().zip(coeffs).enumerate() {
        let (a, b) = (m.row(i), m.row(j));
        for ((o, &u), &v) in out.row_mut(i).iter_mut().zip(a).zip(b) {
            *o = if u == v { u } else { c * u + (1.0 - c) * v };
        }
    }
    out
}

/// Mixes a batch following a fixed plan.
pub fn apply_plan(batch: &Batch, plan: MixPlan) -> Result<MixedBatch> {
    if plan.len() != batch.len() {
        return Err(Error::usage(format!(
            "plan over {} samples for a batch of {}",
            plan.len(),
            batch.len()
        )));
    }
    let inputs = interpolate_rows(
        &batch.inputs,
        plan.permutation.indices(),
        &plan.input_coeffs,
    );
    Ok(MixedBatch {
        inputs,
        targets: batch.targets.clone(),
        plan,
    })
}

/// One augmentation step.
///
/// Draw order on `rng`: the permutation, then the λ values (one per sample,
/// or one per batch with `lambda_per_batch`). Mode `off` draws nothing and
/// returns the batch unchanged. Model-dependent backends read `model`, which
/// is not modified.
pub fn mix_batch(
    batch: &Batch,
    config: &MixupConfig,
    model: Option<&Mlp>,
    rng: &mut RngStream,
) -> Result<MixedBatch> {
    config.validate()?;
    let n = batch.len();
    if config.mode == MixMode::Off {
        return Ok(MixedBatch {
            inputs: batch.inputs.clone(),
            targets: batch.targets.clone(),
            plan: MixPlan::identity(n),
        });
    }
    if config.needs_model() && model.is_none() {
        return Err(Error::usage(
            "the configured distance backend needs a model",
        ));
    }

    let permutation = sample_permutation(n, rng)?;
    let raw_lambdas = if config.lambda_per_batch {
        vec![beta_sample(config.alpha, rng)?; n]
    } else {
        (0..n)
            .map(|_| beta_sample(config.alpha, rng))
            .collect::<Result<Vec<_>>>()?
    };

    let (input_taus, target_taus) = match config.mode {
        MixMode::Vanilla => (vec![WarpParam::IDENTITY; n], vec![WarpParam::IDENTITY; n]),
        MixMode::InputOnly => (vec![WarpParam::IDENTITY; n], vec![WarpParam::Infinite; n]),
        MixMode::TargetOnly => (vec![WarpParam::Infinite; n], vec![WarpParam::IDENTITY; n]),
        MixMode::KernelWarped => {
            let taus = |k: &KernelConfig| {
                let features = extract_features(batch, k.backend, model)?;
                batch_taus(&features, &permutation, k)
            };
            (
                taus(config.input_kernel.as_ref().expect("validated"))?,
                taus(config.output_kernel.as_ref().expect("validated"))?,
            )
        }
        MixMode::Off => unreachable!(),
    };

    let plan = MixPlan::new(permutation, raw_lambdas, input_taus, target_taus)?;
    apply_plan(batch, plan)
}

/// Loss value and its gradient with respect to the model outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub value: f64,
    pub grad: Matrix,
}

/// Training loss on a mixed batch.
///
/// Classification takes logits and returns
/// `(1/n) Σ_i [c_i CE(p_i, y_i) + (1 − c_i) CE(p_i, y_σ(i))]`, equal to the
/// cross-entropy against the mixed one-hot label. Regression returns the
/// mean squared error against ỹ, averaged over samples and output
/// dimensions.
pub fn mixed_loss(outputs: &Matrix, mixed: &MixedBatch) -> Result<LossEval> {
    let n = mixed.len();
    match &mixed.targets {
        Targets::Classes { num_classes, .. } => {
            if outputs.shape() != (n, *num_classes) {
                return Err(Error::usage(format!(
                    "expected {n}×{num_classes} logits, got {:?}",
                    outputs.shape()
                )));
            }
            let pairs = mixed.class_pairs().expect("classification targets");
            let mut grad = Matrix::zeros(n, *num_classes);
            let mut total = 0.0;
            for (i, &(a, b, c)) in pairs.iter().enumerate() {
                let logp = log_softmax(outputs.row(i));
                total -= c * logp[a] + (1.0 - c) * logp[b];
                let g = grad.row_mut(i);
                for (gk, lp) in g.iter_mut().zip(&logp) {
                    *gk = lp.exp();
                }
                g[a] -= c;
                g[b] -= 1.0 - c;
                g.iter_mut().for_each(|v| *v /= n as f64);
            }
            Ok(LossEval {
                value: total / n as f64,
                grad,
            })
        }
        Targets::Values(y) => {
            if outputs.shape() != y.shape() {
                return Err(Error::usage(format!(
                    "expected outputs of shape {:?}, got {:?}",
                    y.shape(),
                    outputs.shape()
                )));
            }
            let target = mixed.mixed_values().expect("regression targets");
            let count = (n * y.cols()) as f64;
            let mut grad = Matrix::zeros(n, y.cols());
            let mut total = 0.0;
            for ((g, &o), &t) in grad
                .as_mut_slice()
                .iter_mut()
                .zip(outputs.as_slice())
                .zip(target.as_slice())
            {
                let r = o - t;
                total += r * r;
                *g = 2.0 * r / count;
            }
            Ok(LossEval {
                value: total / count,
                grad,
            })
        }
    }
}

/// Numerically stable log-softmax of one row.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}
