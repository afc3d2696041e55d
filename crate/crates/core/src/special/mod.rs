//! Special functions behind the warping: Beta(α, α) sampling, ln B and the
//! regularized incomplete beta function, plus the seeded random stream every
//! stochastic routine in the crate draws from.

mod beta;
mod gamma;
mod rng;

pub use beta::{beta_sample, incomplete_beta_reg, log_beta, SHAPE_MAX, SHAPE_MIN};
pub use gamma::log_gamma;
pub use rng::{child_seed, RngStream};
