//! Densities of warped mixing coefficients.

use std::path::Path;

use anyhow::{ensure, Result};
use serde::Serialize;

use kwmix::similarity::{kernel_tau, Backend, KernelConfig};
use kwmix::special::{beta_sample, incomplete_beta_reg, SHAPE_MAX, SHAPE_MIN};
use kwmix::stats::{ks_statistic, mean, unit_histogram};
use kwmix::warping::{warp, WarpParam};
use kwmix::RngStream;

#[derive(Debug, Clone)]
pub struct DemoConfig {
    pub alpha: f64,
    pub samples: usize,
    pub bins: usize,
    pub seed: u64,
    pub taus: Vec<f64>,
    /// (τ_max, τ_std, normalized distances) for kernel-derived τ.
    pub kernel: Option<(f64, f64, Vec<f64>)>,
    /// Extra symmetric Beta shape to report a KS distance against.
    pub compare_shape: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub series: String,
    /// `null` for τ = ∞ and for the raw coefficients.
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    pub mean: f64,
    pub variance: f64,
    /// KS distance to the unwarped Beta(α, α).
    pub ks_raw: f64,
    /// Shape b of the symmetric Beta(b, b) with the same variance.
    pub fitted_shape: Option<f64>,
    pub ks_fitted: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_compare: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoSummary {
    pub alpha: f64,
    pub samples: usize,
    pub bins: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_shape: Option<f64>,
    pub series: Vec<SeriesSummary>,
}

pub struct Histogram {
    pub series: String,
    pub tau: Option<f64>,
    pub distance: Option<f64>,
    pub counts: Vec<usize>,
}

fn beta_cdf(shape: f64) -> impl Fn(f64) -> f64 {
    move |x| incomplete_beta_reg(x.clamp(0.0, 1.0), shape, shape).unwrap_or(f64::NAN)
}

fn summarize(
    series: String,
    tau: Option<f64>,
    distance: Option<f64>,
    values: &[f64],
    cfg: &DemoConfig,
) -> SeriesSummary {
    let m = mean(values);
    let variance = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    let fitted_shape = Some((0.25 / variance - 1.0) / 2.0)
        .filter(|b| b.is_finite() && (SHAPE_MIN..=SHAPE_MAX).contains(b));
    let mut sorted = values.to_vec();
    let ks_raw = ks_statistic(&mut sorted, beta_cdf(cfg.alpha));
    let ks_fitted = fitted_shape.map(|b| ks_statistic(&mut sorted, beta_cdf(b)));
    let ks_compare = cfg
        .compare_shape
        .map(|b| ks_statistic(&mut sorted, beta_cdf(b)));
    SeriesSummary {
        series,
        tau,
        distance,
        mean: m,
        variance,
        ks_raw,
        fitted_shape,
        ks_fitted,
        ks_compare,
    }
}

/// Draws λ ∼ Beta(α, α) once and warps the same draws for every τ, so
/// series differ only through the warp.
pub fn run(cfg: &DemoConfig) -> Result<(DemoSummary, Vec<Histogram>)> {
    ensure!(cfg.samples > 1, "--samples must be at least 2");
    ensure!(cfg.bins > 0, "--bins must be positive");
    let mut rng = RngStream::new(cfg.seed);
    let lambdas = (0..cfg.samples)
        .map(|_| beta_sample(cfg.alpha, &mut rng))
        .collect::<kwmix::Result<Vec<f64>>>()?;

    let mut series: Vec<(String, Option<f64>, Option<f64>, WarpParam)> =
        vec![("raw".into(), None, None, WarpParam::IDENTITY)];
    for &t in &cfg.taus {
        let p = if t == f64::INFINITY {
            WarpParam::Infinite
        } else {
            WarpParam::finite(t)?
        };
        series.push((format!("tau={t}"), p.value(), None, p));
    }
    if let Some((tau_max, tau_std, distances)) = &cfg.kernel {
        let k = KernelConfig::new(*tau_max, *tau_std, Backend::RawInput)?;
        for &d in distances {
            let p = WarpParam::finite(kernel_tau(d, &k)?)?;
            series.push((format!("dbar={d}"), p.value(), Some(d), p));
        }
    }

    let mut summaries = Vec::new();
    let mut hists = Vec::new();
    for (label, tau, distance, p) in series {
        let values = lambdas
            .iter()
            .map(|&l| warp(l, p))
            .collect::<kwmix::Result<Vec<f64>>>()?;
        hists.push(Histogram {
            series: label.clone(),
            tau,
            distance,
            counts: unit_histogram(&values, cfg.bins),
        });
        summaries.push(summarize(label, tau, distance, &values, cfg));
    }
    Ok((
        DemoSummary {
            alpha: cfg.alpha,
            samples: cfg.samples,
            bins: cfg.bins,
            seed: cfg.seed,
            compare_shape: cfg.compare_shape,
            series: summaries,
        },
        hists,
    ))
}

/// Long-format density table, one row per (series, bin).
pub fn write_density_csv(path: &Path, hists: &[Histogram], samples: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "series", "tau", "distance", "bin_lo", "bin_hi", "count", "density",
    ])?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for h in hists {
        let m = h.counts.len();
        let width = 1.0 / m as f64;
        for (i, &c) in h.counts.iter().enumerate() {
            w.write_record([
                h.series.clone(),
                h.tau.map_or_else(
                    || {
                        if h.series == "raw" {
                            String::new()
                        } else {
                            "inf".into()
                        }
                    },
                    |t| t.to_string(),
                ),
                opt(h.distance),
                (i as f64 / m as f64).to_string(),
                ((i + 1) as f64 / m as f64).to_string(),
                c.to_string(),
                (c as f64 / (samples as f64 * width)).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
