//! The training loop: shuffle, mix, forward, backward, step.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixer::{apply_plan, mix_batch, mixed_loss, sample_permutation, Batch, MixPlan};
use crate::model::{Mlp, Mode, Optimizer};
use crate::special::RngStream;

use super::config::ExperimentConfig;
use super::split::Splits;

/// Sub-stream indices derived from a run seed with [`RngStream::split`].
pub mod streams {
    pub const SPLIT: u64 = 0;
    pub const INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const MIX: u64 = 3;
    pub const DROPOUT: u64 = 4;
    pub const EVAL: u64 = 5;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingTrace {
    /// CSV with columns `epoch,train_loss,valid_loss`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["epoch", "train_loss", "valid_loss"])?;
        for e in &self.epochs {
            w.write_record([
                e.epoch.to_string(),
                e.train_loss.to_string(),
                e.valid_loss.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    fn pairs(&self) -> Vec<(f64, f64)> {
        self.epochs
            .iter()
            .map(|e| (e.train_loss, e.valid_loss))
            .collect()
    }
}

/// Unmixed loss of the model in eval mode, as used for validation.
pub fn plain_loss(model: &Mlp, batch: &Batch) -> Result<f64> {
    let out = model.predict(&batch.inputs)?;
    let mixed = apply_plan(batch, MixPlan::identity(batch.len()))?;
    Ok(mixed_loss(&out, &mixed)?.value)
}

/// A freshly initialised model for the splits, from the run seed's
/// initialisation stream.
pub fn init_model(config: &ExperimentConfig, splits: &Splits, seed: u64) -> Result<Mlp> {
    let out_dim = match &splits.train.targets {
        crate::mixer::Targets::Classes { num_classes, .. } => *num_classes,
        crate::mixer::Targets::Values(m) => m.cols(),
    };
    let mut rng = RngStream::new(seed).split(streams::INIT);
    Mlp::init(&config.model, splits.train.inputs.cols(), out_dim, &mut rng)
}

/// Trains from a fresh initialisation.
pub fn train(
    config: &ExperimentConfig,
    splits: &Splits,
    seed: u64,
) -> Result<(Mlp, TrainingTrace)> {
    let model = init_model(config, splits, seed)?;
    train_from(config, splits, seed, model)
}

/// Trains a given model. Mini-batches follow a per-epoch shuffle of the
/// training rows; the last batch of an epoch may be smaller. A non-finite
/// batch loss aborts with [`Error::Diverged`].
pub fn train_from(
    config: &ExperimentConfig,
    splits: &Splits,
    seed: u64,
    mut model: Mlp,
) -> Result<(Mlp, TrainingTrace)> {
    config.validate()?;
    let root = RngStream::new(seed);
    let mut shuffle_rng = root.split(streams::SHUFFLE);
    let mut mix_rng = root.split(streams::MIX);
    let mut dropout_rng = root.split(streams::DROPOUT);

    let tc = &config.training;
    let mut opt = Optimizer::new(tc.optimizer, tc.learning_rate, tc.weight_decay)?;
    let needs_model = config.mixup.needs_model();
    let n = splits.train.len();
    let mut trace = TrainingTrace::default();

    for epoch in 0..tc.epochs {
        opt.set_learning_rate(tc.learning_rate_at(epoch));
        let order = sample_permutation(n, &mut shuffle_rng)?;
        let mut total = 0.0;
        for (b, chunk) in order.indices().chunks(tc.batch_size).enumerate() {
            let batch = splits.train.select(chunk);
            let mixed = mix_batch(
                &batch,
                &config.mixup,
                needs_model.then_some(&model),
                &mut mix_rng,
            )?;
            model.set_mode(Mode::Train);
            let (out, cache) = model.forward(&mixed.inputs, Some(&mut dropout_rng))?;
            let loss = mixed_loss(&out, &mixed)?;
            if !loss.value.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: b,
                    loss: loss.value,
                    trace: trace.pairs(),
                });
            }
            total += loss.value * chunk.len() as f64;
            let grads = model.backward(&cache, &loss.grad)?;
            opt.step(&mut model, &grads)?;
        }
        model.set_mode(Mode::Eval);
        let valid_loss = plain_loss(&model, &splits.valid)?;
        let train_loss = total / n as f64;
        log::debug!("epoch {epoch}: train {train_loss:.6} valid {valid_loss:.6}");
        if !model.layers().iter().all(|l| l.weights.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                batch: n.div_ceil(tc.batch_size),
                loss: train_loss,
                trace: trace.pairs(),
            });
        }
        trace.epochs.push(EpochRecord {
            epoch,
            train_loss,
            valid_loss,
        });
    }
    model.set_mode(Mode::Eval);
    Ok((model, trace))
}

/// Writes any serializable value as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}
