use std::path::PathBuf;

use sfn_core::landscape::FinderError;
use sfn_core::mlp::DataError;
use sfn_core::objectives::ObjectiveError;
use sfn_core::optimizers::OptimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("objective: {0}")]
    Objective(#[from] ObjectiveError),
    #[error("dataset: {0}")]
    Data(#[from] DataError),
    #[error("optimizer: {0}")]
    Optim(#[from] OptimError),
    #[error("critical point search: {0}")]
    Finder(#[from] FinderError<f64>),
    #[error("all {0} search trials diverged")]
    SearchDiverged(usize),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn config(msg: &str) -> Self {
        Self::Config(msg.to_string())
    }

    /// 2 for anything wrong with the configuration, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Objective(_) | Self::Optim(OptimError::InvalidConfig(_)) => 2,
            _ => 3,
        }
    }
}
