//! Sweeps over (τ_max, τ_std) with kernel-warped mixup.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::data::Dataset;
use super::report::{aggregate, Aggregate, SeedMetrics};
use super::run::{run_seed, with_pool};

/// Outcome of one (cell, seed) job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metrics: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub tau_max: f64,
    pub tau_std: f64,
    pub seeds: Vec<SeedOutcome>,
    /// Over the successful seeds only.
    pub aggregate: BTreeMap<String, Aggregate>,
}

impl GridCell {
    pub fn failed(&self) -> bool {
        self.seeds.iter().any(|s| s.error.is_some())
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.aggregate.get(metric).map(|a| a.mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub config: ExperimentConfig,
    pub cells: Vec<GridCell>,
}

impl GridReport {
    /// Cells without failures, ordered by ascending mean of `metric`.
    pub fn ranked(&self, metric: &str) -> Vec<&GridCell> {
        let mut cells: Vec<&GridCell> = self
            .cells
            .iter()
            .filter(|c| !c.failed() && c.mean(metric).is_some_and(f64::is_finite))
            .collect();
        cells.sort_by(|a, b| a.mean(metric).unwrap().total_cmp(&b.mean(metric).unwrap()));
        cells
    }

    /// Long format: one row per (cell, seed, metric). Failed jobs are
    /// omitted here and kept in the JSON report.
    pub fn write_long_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["tau_max", "tau_std", "seed", "metric", "value"])?;
        for c in &self.cells {
            for s in &c.seeds {
                for (k, v) in s.metrics.iter().flatten() {
                    w.write_record([
                        c.tau_max.to_string(),
                        c.tau_std.to_string(),
                        s.seed.to_string(),
                        k.clone(),
                        v.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Trains and evaluates every (τ_max, τ_std) cell for every seed. Each
/// (cell, seed) pair is an independent job whose randomness derives from
/// the seed, so a cell reproduces a single run of the same configuration.
/// A failing job is recorded in its cell and the sweep continues.
pub fn grid_search(
    config: &ExperimentConfig,
    dataset: &Dataset,
    tau_max_list: &[f64],
    tau_std_list: &[f64],
    seeds: &[u64],
    jobs: usize,
) -> Result<GridReport> {
    if tau_max_list.is_empty() || tau_std_list.is_empty() || seeds.is_empty() {
        return Err(Error::usage("grid lists and seeds must be non-empty"));
    }
    let mut cell_configs = Vec::new();
    for &tm in tau_max_list {
        for &ts in tau_std_list {
            let mut c = config.with_kernel(tm, ts)?;
            c.seeds = seeds.to_vec();
            c.validate()?;
            cell_configs.push((tm, ts, c));
        }
    }
    let job_list: Vec<(usize, u64)> = (0..cell_configs.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let outcomes: Vec<SeedOutcome> = with_pool(jobs, || {
        job_list
            .par_iter()
            .map(
                |&(c, seed)| match run_seed(&cell_configs[c].2, dataset, seed) {
                    Ok(r) => SeedOutcome {
                        seed,
                        metrics: Some(r.metrics.metrics),
                        error: None,
                    },
                    Err(e) => {
                        log::warn!(
                            "cell tau_max={} tau_std={} seed {seed} failed: {e}",
                            cell_configs[c].0,
                            cell_configs[c].1
                        );
                        SeedOutcome {
                            seed,
                            metrics: None,
                            error: Some(e.to_string()),
                        }
                    }
                },
            )
            .collect()
    })?;

    let cells = cell_configs
        .iter()
        .zip(outcomes.chunks(seeds.len()))
        .map(|((tm, ts, _), out)| {
            let ok: Vec<SeedMetrics> = out
                .iter()
                .filter_map(|o| {
                    o.metrics.clone().map(|metrics| SeedMetrics {
                        seed: o.seed,
                        metrics,
                    })
                })
                .collect();
            GridCell {
                tau_max: *tm,
                tau_std: *ts,
                seeds: out.to_vec(),
                aggregate: aggregate(&ok),
            }
        })
        .collect();
    let mut echo = config.clone();
    echo.seeds = seeds.to_vec();
    Ok(GridReport {
        config: echo,
        cells,
    })
}
