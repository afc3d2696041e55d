//! One experiment: every seed trained and evaluated independently.

use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::MetricReport;
use crate::model::Mlp;
use crate::special::child_seed;

use super::config::{DataSource, ExperimentConfig};
use super::data::{gaussian_blobs, load_csv, Dataset};
use super::evaluate::{evaluate, Predictions};
use super::report::{RunReport, SeedMetrics};
use super::split::{split, Splits};
use super::train::{streams, train, TrainingTrace};

/// Loads the configured dataset. Relative CSV paths are resolved against
/// `base` when given.
pub fn load_dataset(source: &DataSource, base: Option<&Path>) -> Result<Dataset> {
    match source {
        DataSource::Csv { path, schema } => {
            let full = match base {
                Some(b) if path.is_relative() => b.join(path),
                _ => path.clone(),
            };
            load_csv(&full, schema)
        }
        DataSource::Blobs { blobs } => gaussian_blobs(blobs),
    }
}

/// The seed's partition of the dataset.
pub fn prepare_splits(config: &ExperimentConfig, dataset: &Dataset, seed: u64) -> Result<Splits> {
    if dataset.task() != config.data.task() {
        return Err(Error::Config(format!(
            "dataset is {:?} but the configuration expects {:?}",
            dataset.task(),
            config.data.task()
        )));
    }
    split(dataset, &config.split, child_seed(seed, streams::SPLIT))
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub model: Mlp,
    pub trace: TrainingTrace,
    pub metrics: MetricReport,
    pub predictions: Predictions,
}

/// Split, train and evaluate for one seed. Depends on nothing but the
/// configuration, the dataset and the seed.
pub fn run_seed(config: &ExperimentConfig, dataset: &Dataset, seed: u64) -> Result<SeedRun> {
    let splits = prepare_splits(config, dataset, seed)?;
    let (model, trace) = train(config, &splits, seed)?;
    let (metrics, predictions) = evaluate(&model, &splits, &config.eval, seed)?;
    Ok(SeedRun {
        seed,
        model,
        trace,
        metrics,
        predictions,
    })
}

/// Runs `f` on a pool of `jobs` threads (0 = rayon's default).
pub fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// All seeds of the configuration, in parallel over `jobs` threads. The
/// first failing seed aborts the run.
pub fn run_experiment(
    config: &ExperimentConfig,
    dataset: &Dataset,
    jobs: usize,
) -> Result<(RunReport, Vec<SeedRun>)> {
    config.validate()?;
    let runs = with_pool(jobs, || {
        config
            .seeds
            .par_iter()
            .map(|&s| run_seed(config, dataset, s))
            .collect::<Result<Vec<_>>>()
    })??;
    let per_seed = runs
        .iter()
        .map(|r| SeedMetrics {
            seed: r.seed,
            metrics: r.metrics.metrics.clone(),
        })
        .collect();
    Ok((RunReport::new(config.clone(), per_seed), runs))
}
