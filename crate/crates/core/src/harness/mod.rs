//! Experiment harness: data, splits, training, evaluation, sweeps.

pub mod config;
pub mod data;
pub mod evaluate;
pub mod grid;
pub mod report;
pub mod run;
pub mod split;
pub mod train;

pub use config::{DataSource, EvalConfig, ExperimentConfig, Schedule, TrainingConfig};
pub use data::{
    gaussian_blobs, load_csv, BlobsConfig, ColumnRef, CsvSchema, Dataset, Delimiter, Task,
};
pub use evaluate::{evaluate, predict_test, Predictions};
pub use grid::{grid_search, GridCell, GridReport, SeedOutcome};
pub use report::{Aggregate, RunReport, SeedMetrics, Timing};
pub use run::{load_dataset, prepare_splits, run_experiment, run_seed, SeedRun};
pub use split::{split, Normalization, SplitFractions, Splits};
pub use train::{init_model, streams, train, train_from, write_json, EpochRecord, TrainingTrace};
