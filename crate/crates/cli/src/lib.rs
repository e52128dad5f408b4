//! Experiment runner: TOML configs in, CSV and JSON artifacts out.

pub mod config;
pub mod error;
pub mod experiment;
pub mod search;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::CliError;
pub use experiment::run_experiment;
