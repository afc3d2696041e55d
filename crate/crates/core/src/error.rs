use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// Shapes, lengths or configuration combinations that do not fit together.
    #[error("usage error: {0}")]
    Usage(String),

    /// An iterative routine hit its iteration cap before converging.
    #[error("no convergence in {op} after {iterations} iterations (x={x}, a={a}, b={b})")]
    NonConvergence {
        op: &'static str,
        iterations: usize,
        x: f64,
        a: f64,
        b: f64,
    },

    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{}: row {row}, column {column}: cannot parse {value:?} as a number", path.display())]
    NonNumeric {
        path: PathBuf,
        row: usize,
        column: usize,
        value: String,
    },

    #[error("{}: row {row}: {detail}", path.display())]
    MalformedRow {
        path: PathBuf,
        row: usize,
        detail: String,
    },

    #[error("{}: dataset has no rows", .0.display())]
    EmptyDataset(PathBuf),

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Diverged {
        epoch: usize,
        batch: usize,
        loss: f64,
        /// Per-epoch (train, valid) losses recorded before the failure.
        trace: Vec<(f64, f64)>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn usage(detail: impl Into<String>) -> Self {
        Error::Usage(detail.into())
    }

    /// Whether the error stems from caller input rather than a runtime failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Usage(_) | Error::Domain { .. } | Error::Config(_)
        )
    }
}
