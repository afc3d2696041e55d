use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::special::RngStream;

static NEXT_GENERATION: AtomicU64 = AtomicU64::new(1);

fn fresh_generation() -> u64 {
    NEXT_GENERATION.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// A dense layer `act(x Wᵀ + b)` with `W` stored as (out × in), row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::usage(format!(
                "layer has {} outputs but {} biases",
                weights.rows(),
                bias.len()
            )));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    fn affine(&self, inputs: &Matrix) -> Result<Matrix> {
        let mut z = inputs.matmul_transposed(&self.weights)?;
        for r in 0..z.rows() {
            for (v, b) in z.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    Eval,
}

/// Fully connected network. Dropout (inverted: kept units are scaled by
/// 1 / keep) follows every hidden layer, never the output layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Dense>,
    dropout_rate: f64,
    mode: Mode,
    #[serde(skip, default = "fresh_generation")]
    generation: u64,
}

impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
            && self.dropout_rate == other.dropout_rate
            && self.mode == other.mode
    }
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    generation: u64,
    /// Input to each layer.
    inputs: Vec<Matrix>,
    /// Pre-activation of each layer.
    pre_activations: Vec<Matrix>,
    /// Dropout scale factors (0 or 1/keep) after each hidden layer, if active.
    masks: Vec<Option<Matrix>>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.inputs.first().map_or(0, Matrix::rows)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Gradients for every layer, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(model: &Mlp) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: Matrix::zeros(l.weights.rows(), l.weights.cols()),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.as_slice().iter().chain(&l.bias))
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Layer widths and dropout for [`Mlp::init`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub hidden: Vec<usize>,
    pub dropout: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128],
            dropout: 0.2,
        }
    }
}

impl Mlp {
    /// Builds a network from explicit layers; consecutive dimensions must chain.
    pub fn from_layers(layers: Vec<Dense>, dropout_rate: f64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::usage("a network needs at least one layer"));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::usage(format!(
                "dropout rate must lie in [0, 1), got {dropout_rate}"
            )));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::usage(format!(
                    "layer {i} outputs {} values but layer {} expects {}",
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                )));
            }
        }
        if layers
            .iter()
            .any(|l| !l.weights.is_finite() || l.bias.iter().any(|b| !b.is_finite()))
        {
            return Err(Error::usage("network parameters must be finite"));
        }
        Ok(Self {
            layers,
            dropout_rate,
            mode: Mode::Train,
            generation: fresh_generation(),
        })
    }

    /// Random initialisation: weights ~ U(−1/√fan_in, 1/√fan_in), biases zero.
    /// Hidden layers use ReLU, the output layer is linear.
    pub fn init(
        spec: &ModelSpec,
        input_dim: usize,
        output_dim: usize,
        rng: &mut RngStream,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 || spec.hidden.contains(&0) {
            return Err(Error::usage("layer widths must be positive"));
        }
        let mut dims = vec![input_dim];
        dims.extend(&spec.hidden);
        dims.push(output_dim);
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let data = (0..fan_in * fan_out)
                    .map(|_| rng.uniform_in(-bound, bound))
                    .collect();
                let act = if i == last {
                    Activation::Identity
                } else {
                    Activation::Relu
                };
                Dense::new(
                    Matrix::from_vec(fan_out, fan_in, data)?,
                    vec![0.0; fan_out],
                    act,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(layers, spec.dropout)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    /// Mutable access to the parameters; invalidates outstanding caches.
    pub fn layers_mut(&mut self) -> &mut [Dense] {
        self.generation = fresh_generation();
        &mut self.layers
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn num_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum()
    }

    /// Forward pass following the model's mode: in train mode with a
    /// positive dropout rate a random stream is required and dropout is
    /// applied; eval mode is deterministic and ignores `rng`.
    pub fn forward(
        &self,
        inputs: &Matrix,
        rng: Option<&mut RngStream>,
    ) -> Result<(Matrix, ForwardCache)> {
        let dropout = self.mode == Mode::Train && self.dropout_rate > 0.0;
        match (dropout, rng) {
            (true, None) => Err(Error::usage(
                "train-mode forward with dropout needs a random stream",
            )),
            (true, Some(rng)) => self.run(inputs, Some(rng), self.layers.len()),
            (false, _) => self.run(inputs, None, self.layers.len()),
        }
    }

    /// Deterministic forward pass without dropout, regardless of mode.
    pub fn predict(&self, inputs: &Matrix) -> Result<Matrix> {
        Ok(self.run(inputs, None, self.layers.len())?.0)
    }

    /// Forward pass with dropout active, regardless of mode.
    pub fn predict_stochastic(&self, inputs: &Matrix, rng: &mut RngStream) -> Result<Matrix> {
        Ok(self.run(inputs, Some(rng), self.layers.len())?.0)
    }

    /// Eval-mode activations entering the final layer, h_φ(x).
    pub fn embed(&self, inputs: &Matrix) -> Result<Matrix> {
        if self.layers.len() < 2 {
            return Err(Error::usage(
                "embedding needs a network with at least two layers",
            ));
        }
        Ok(self.run(inputs, None, self.layers.len() - 1)?.0)
    }

    fn run(
        &self,
        inputs: &Matrix,
        mut rng: Option<&mut RngStream>,
        depth: usize,
    ) -> Result<(Matrix, ForwardCache)> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::usage(format!(
                "inputs have dimension {}, network expects {}",
                inputs.cols(),
                self.input_dim()
            )));
        }
        let keep = 1.0 - self.dropout_rate;
        let last = self.layers.len() - 1;
        let mut cache = ForwardCache {
            generation: self.generation,
            inputs: Vec::with_capacity(depth),
            pre_activations: Vec::with_capacity(depth),
            masks: Vec::with_capacity(depth),
        };
        let mut a = inputs.clone();
        for (i, layer) in self.layers.iter().take(depth).enumerate() {
            let z = layer.affine(&a)?;
            let mut out = z.clone();
            out.map_inplace(|v| layer.activation.apply(v));
            let mask = match rng.as_deref_mut() {
                Some(rng) if i < last && self.dropout_rate > 0.0 => {
                    let mut m = Matrix::zeros(out.rows(), out.cols());
                    for (mv, ov) in m.as_mut_slice().iter_mut().zip(out.as_mut_slice()) {
                        if rng.uniform() < keep {
                            *mv = 1.0 / keep;
                        }
                        *ov *= *mv;
                    }
                    Some(m)
                }
                _ => None,
            };
            cache.inputs.push(std::mem::replace(&mut a, out));
            cache.pre_activations.push(z);
            cache.masks.push(mask);
        }
        Ok((a, cache))
    }

    /// Gradients of a loss with respect to all parameters, given the loss
    /// gradient with respect to the network outputs.
    pub fn backward(&self, cache: &ForwardCache, loss_grad: &Matrix) -> Result<Gradients> {
        if cache.generation != self.generation || cache.inputs.len() != self.layers.len() {
            return Err(Error::usage(
                "forward cache does not belong to the current parameters",
            ));
        }
        if loss_grad.shape() != (cache.batch_size(), self.output_dim()) {
            return Err(Error::usage(format!(
                "loss gradient has shape {:?}, expected ({}, {})",
                loss_grad.shape(),
                cache.batch_size(),
                self.output_dim()
            )));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = loss_grad.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if let Some(mask) = &cache.masks[i] {
                for (d, m) in delta.as_mut_slice().iter_mut().zip(mask.as_slice()) {
                    *d *= m;
                }
            }
            for (d, z) in delta
                .as_mut_slice()
                .iter_mut()
                .zip(cache.pre_activations[i].as_slice())
            {
                *d *= layer.activation.derivative(*z);
            }
            let weights = delta.transposed_matmul(&cache.inputs[i])?;
            let mut bias = vec![0.0; layer.output_dim()];
            for row in delta.iter_rows() {
                for (b, d) in bias.iter_mut().zip(row) {
                    *b += d;
                }
            }
            grads.push(LayerGrad { weights, bias });
            if i > 0 {
                delta = delta.matmul(&layer.weights)?;
            }
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }
}
