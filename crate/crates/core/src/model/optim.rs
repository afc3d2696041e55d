use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    SgdMomentum { momentum: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// SGD with momentum or Adam (bias-corrected). Weight decay is decoupled:
/// `p ← p − lr · wd · p` before the gradient update.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    weight_decay: f64,
    steps: u64,
    /// Momentum buffer (SGD) or first moment (Adam).
    first: Option<Gradients>,
    /// Second moment (Adam only).
    second: Option<Gradients>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, weight_decay: f64) -> Result<Self> {
        if !(learning_rate.is_finite() && learning_rate >= 0.0) {
            return Err(Error::usage(format!(
                "learning rate must be non-negative, got {learning_rate}"
            )));
        }
        if !(weight_decay.is_finite() && weight_decay >= 0.0) {
            return Err(Error::usage(format!(
                "weight decay must be non-negative, got {weight_decay}"
            )));
        }
        Ok(Self {
            kind,
            learning_rate,
            weight_decay,
            steps: 0,
            first: None,
            second: None,
        })
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.learning_rate = lr;
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, model: &mut Mlp, grads: &Gradients) -> Result<()> {
        let layers = model.layers();
        if grads.layers.len() != layers.len()
            || grads.layers.iter().zip(layers).any(|(g, l)| {
                g.weights.shape() != l.weights.shape() || g.bias.len() != l.bias.len()
            })
        {
            return Err(Error::usage("gradient shapes do not match the model"));
        }
        if self.first.is_none() {
            self.first = Some(Gradients::zeros_like(model));
            if matches!(self.kind, OptimizerKind::Adam { .. }) {
                self.second = Some(Gradients::zeros_like(model));
            }
        }
        self.steps += 1;
        let lr = self.learning_rate;
        let decay = 1.0 - lr * self.weight_decay;
        let first = self.first.as_mut().expect("initialised above");

        match self.kind {
            OptimizerKind::SgdMomentum { momentum } => {
                for ((layer, g), v) in model
                    .layers_mut()
                    .iter_mut()
                    .zip(&grads.layers)
                    .zip(&mut first.layers)
                {
                    let params = layer
                        .weights
                        .as_mut_slice()
                        .iter_mut()
                        .chain(layer.bias.iter_mut());
                    let gs = g.weights.as_slice().iter().chain(&g.bias);
                    let vs = v.weights.as_mut_slice().iter_mut().chain(v.bias.iter_mut());
                    for ((p, &g), v) in params.zip(gs).zip(vs) {
                        *v = momentum * *v + g;
                        *p = *p * decay - lr * *v;
                    }
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let second = self.second.as_mut().expect("initialised above");
                let t = self.steps as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for (((layer, g), m), s) in model
                    .layers_mut()
                    .iter_mut()
                    .zip(&grads.layers)
                    .zip(&mut first.layers)
                    .zip(&mut second.layers)
                {
                    let params = layer
                        .weights
                        .as_mut_slice()
                        .iter_mut()
                        .chain(layer.bias.iter_mut());
                    let gs = g.weights.as_slice().iter().chain(&g.bias);
                    let ms = m.weights.as_mut_slice().iter_mut().chain(m.bias.iter_mut());
                    let ss = s.weights.as_mut_slice().iter_mut().chain(s.bias.iter_mut());
                    for (((p, &g), m), s) in params.zip(gs).zip(ms).zip(ss) {
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        *s = beta2 * *s + (1.0 - beta2) * g * g;
                        let m_hat = *m / c1;
                        let s_hat = *s / c2;
                        *p = *p * decay - lr * m_hat / (s_hat.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}
