//! Warping functions ω_τ: [0, 1] → [0, 1], the Beta(τ, τ) CDF.
//!
//! τ = 1 is the identity, τ < 1 pulls coefficients toward ½ and τ > 1 pushes
//! them toward 0 and 1. The infinite limit is a step at ½, which turns off
//! mixing on that side of the pair (inputs for Mixup-TO, targets for
//! Mixup-IO).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{incomplete_beta_reg, SHAPE_MAX, SHAPE_MIN};

/// The warping parameter τ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarpParam {
    Finite(f64),
    /// τ → +∞: a step function with `warp(½) = 1`.
    Infinite,
}

impl WarpParam {
    pub const IDENTITY: WarpParam = WarpParam::Finite(1.0);

    /// A finite τ, clamped to the shape range of the incomplete beta function.
    pub fn finite(tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::domain(
                "WarpParam::finite",
                format!("tau must be positive and finite, got {tau}"),
            ));
        }
        let clamped = tau.clamp(SHAPE_MIN, SHAPE_MAX);
        if clamped != tau {
            log::debug!("warping parameter {tau} clamped to {clamped}");
        }
        Ok(WarpParam::Finite(clamped))
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            WarpParam::Finite(t) => Some(t),
            WarpParam::Infinite => None,
        }
    }
}

/// ω_τ(λ).
pub fn warp(lambda: f64, tau: WarpParam) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(
            "warp",
            format!("lambda must lie in [0, 1], got {lambda}"),
        ));
    }
    match tau {
        // exact identity, so vanilla mixup reproduces raw coefficients bit for bit
        WarpParam::Finite(1.0) => Ok(lambda),
        WarpParam::Finite(t) => incomplete_beta_reg(lambda, t, t),
        WarpParam::Infinite => Ok(if lambda < 0.5 { 0.0 } else { 1.0 }),
    }
}

/// Element-wise [`warp`] over a batch.
pub fn warp_pairwise(lambdas: &[f64], taus: &[WarpParam]) -> Result<Vec<f64>> {
    if lambdas.len() != taus.len() {
        return Err(Error::usage(format!(
            "warp_pairwise: {} coefficients but {} warping parameters",
            lambdas.len(),
            taus.len()
        )));
    }
    lambdas
        .iter()
        .zip(taus)
        .map(|(&l, &t)| warp(l, t))
        .collect()
}
