//! Multi-seed reports with aggregates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{mean, sample_std};

use super::config::ExperimentConfig;

/// Mean and sample standard deviation (n − 1) of one metric across seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        Self {
            mean: mean(values),
            std: sample_std(values),
            count: values.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
}

/// Aggregates every metric over the seeds that report it.
pub fn aggregate(per_seed: &[SeedMetrics]) -> BTreeMap<String, Aggregate> {
    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for s in per_seed {
        for (k, &v) in &s.metrics {
            values.entry(k.clone()).or_default().push(v);
        }
    }
    values
        .into_iter()
        .map(|(k, v)| (k, Aggregate::of(&v)))
        .collect()
}

/// Per-seed metrics, their aggregates and the configuration that produced
/// them. Contains nothing time-dependent, so repeated runs serialize to
/// identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedMetrics>,
    pub aggregate: BTreeMap<String, Aggregate>,
}

impl RunReport {
    pub fn new(config: ExperimentConfig, seeds: Vec<SeedMetrics>) -> Self {
        let aggregate = aggregate(&seeds);
        Self {
            name: config.name.clone(),
            config,
            seeds,
            aggregate,
        }
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.aggregate.get(metric).map(|a| a.mean)
    }

    /// Checks the stored aggregates against the per-seed values.
    pub fn verify(&self) -> Result<()> {
        let fresh = aggregate(&self.seeds);
        if fresh.len() != self.aggregate.len() {
            return Err(Error::Config(
                "aggregate metric set differs from per-seed metrics".into(),
            ));
        }
        for (k, a) in &fresh {
            let b = self
                .aggregate
                .get(k)
                .ok_or_else(|| Error::Config(format!("missing aggregate for {k}")))?;
            let close =
                |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs())) || x == y;
            if a.count != b.count || !close(a.mean, b.mean) || !close(a.std, b.std) {
                return Err(Error::Config(format!("aggregate for {k} does not match")));
            }
        }
        Ok(())
    }
}

/// Wall-clock duration, kept apart from the deterministic report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub duration_secs: f64,
}
