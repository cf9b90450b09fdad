//! Experiment runner for the xferlab transfer-learning laboratory: config
//! parsing, seeded cell scheduling, result tables, plots and the CLI.

pub mod cli;
pub mod config;
pub mod domains;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod seeds;
pub mod table;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::RunError;
pub use experiments::{run_experiment, RunOptions, RunOutput};
pub use table::{format_g6, ResultTable, Value};
