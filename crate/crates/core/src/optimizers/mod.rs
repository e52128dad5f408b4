//! Step rules and the epoch loop for gradient descent, momentum SGD, damped
//! Newton and the exact and Krylov-subspace saddle-free Newton methods.

mod config;
mod krylov;
mod run;
mod steps;

use std::fmt::Write as _;

use thiserror::Error;

use crate::numerics::LinalgError;
use crate::Scalar;

pub use config::{Method, OptimizerConfig, DEFAULT_DAMPING_GRID};
pub use krylov::{
    damped_newton_subspace_step, sfn_krylov_step, KrylovStep, SubspaceModel,
};
pub use run::{lambda_min, run, run_with, RunOutcome, DENSE_LAMBDA_CAP};
pub use steps::{damped_newton_step, gd_step, msgd_step, sfn_exact_step, DampedStep};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimError {
    #[error("diverged: {0}")]
    Diverged(&'static str),
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
    #[error("method needs a dense Hessian, unavailable for {0} parameters")]
    DenseHessianUnavailable(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub const TRAJECTORY_HEADER: &str = "epoch,error,grad_norm,lambda_min,step_norm,wall_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord<T> {
    pub epoch: usize,
    pub error: T,
    pub grad_norm: T,
    /// Most negative Hessian eigenvalue (or Ritz value) after the epoch.
    pub lambda_min: T,
    pub step_norm: T,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLog<T> {
    pub records: Vec<EpochRecord<T>>,
    pub diverged: bool,
}

impl<T: Scalar> TrajectoryLog<T> {
    pub fn last(&self) -> Option<&EpochRecord<T>> {
        self.records.last()
    }

    /// First epoch whose error is strictly below `threshold`.
    pub fn first_epoch_below(&self, threshold: T) -> Option<usize> {
        self.records.iter().find(|r| r.error < threshold).map(|r| r.epoch)
    }

    /// CSV body (header plus one LF-terminated row per epoch). Floats use
    /// the shortest round-trip scientific notation.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(TRAJECTORY_HEADER);
        out.push('\n');
        for r in &self.records {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{}",
                r.epoch, r.error, r.grad_norm, r.lambda_min, r.step_norm, r.wall_ms
            )
            .expect("write to string");
        }
        out
    }
}
