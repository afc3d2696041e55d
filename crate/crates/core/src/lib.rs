//! Kernel warping mixup.
//!
//! Mixup draws an interpolation coefficient λ ~ Beta(α, α) for each training
//! pair. Here every coefficient is passed through a warping function, the
//! Beta(τ, τ) CDF, whose parameter τ is chosen per pair by a similarity
//! kernel over batch-normalized squared distances. Close pairs get τ < 1 and
//! are mixed strongly; distant pairs get τ > 1 and are pushed back toward
//! their endpoints.
//!
//! The crate is organised bottom-up:
//!
//! - [`special`]: Beta sampling and the regularized incomplete beta function
//! - [`warping`]: the warping function and its IO/TO limits
//! - [`similarity`]: normalized distances and the similarity kernel
//! - [`mixer`]: per-batch augmentation and the mixed loss
//! - [`metrics`]: accuracy, RMSE/MAPE, ECE, Brier, NLL, UCE, ENCE, temperature scaling
//! - [`model`]: a small MLP with dropout, manual backprop, SGD and Adam
//! - [`harness`]: data loading, splitting, training, evaluation and grid search

pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod mixer;
pub mod model;
pub mod similarity;
pub mod special;
pub mod stats;
pub mod warping;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use special::RngStream;
