use serde::{Deserialize, Serialize};

use super::OptimError;

/// `{1, 1e-1, …, 1e-5}`
pub const DEFAULT_DAMPING_GRID: [f64; 6] = [1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Msgd,
    Gd,
    DampedNewton,
    SfnExact,
    SfnKrylov,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Msgd => "msgd",
            Self::Gd => "gd",
            Self::DampedNewton => "damped_newton",
            Self::SfnExact => "sfn_exact",
            Self::SfnKrylov => "sfn_krylov",
        }
    }
}

fn default_learning_rate() -> f64 {
    0.01
}
fn default_grid() -> Vec<f64> {
    DEFAULT_DAMPING_GRID.to_vec()
}
fn default_true() -> bool {
    true
}
fn default_krylov_k() -> usize {
    20
}
fn default_one() -> usize {
    1
}
fn default_max_epochs() -> usize {
    100
}
fn default_grad_tol() -> f64 {
    1e-10
}
fn default_probe_k() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub method: Method,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub momentum: f64,
    /// `None` means full batch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minibatch_size: Option<usize>,
    /// Update steps longer than this are rescaled to it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_threshold: Option<f64>,
    #[serde(default = "default_grid")]
    pub damping_grid: Vec<f64>,
    /// Damped Newton only: restrict the grid to shifts that make `H + αI`
    /// positive definite. Off gives the pure (possibly indefinite) Newton step.
    #[serde(default = "default_true")]
    pub force_positive_definite: bool,
    #[serde(default = "default_krylov_k")]
    pub krylov_k: usize,
    /// Subspace steps per Krylov basis.
    #[serde(default = "default_one")]
    pub inner_steps: usize,
    /// Krylov bases per epoch.
    #[serde(default = "default_one")]
    pub outer_steps: usize,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default)]
    pub seed: u64,
    /// The run stops once the full gradient norm is below this.
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    /// Lanczos size used to estimate `λ_min` when no dense Hessian is formed.
    #[serde(default = "default_probe_k")]
    pub probe_k: usize,
    /// Record per-epoch wall time; off keeps logs byte-reproducible.
    #[serde(default)]
    pub wall_clock: bool,
}

impl OptimizerConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            learning_rate: default_learning_rate(),
            momentum: 0.0,
            minibatch_size: None,
            clip_threshold: None,
            damping_grid: default_grid(),
            force_positive_definite: true,
            krylov_k: default_krylov_k(),
            inner_steps: 1,
            outer_steps: 1,
            max_epochs: default_max_epochs(),
            seed: 0,
            grad_tol: default_grad_tol(),
            probe_k: default_probe_k(),
            wall_clock: false,
        }
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        let bad = |msg: &str| Err(OptimError::InvalidConfig(msg.to_string()));
        if self.damping_grid.is_empty() {
            return bad("damping_grid must not be empty");
        }
        if self.damping_grid.iter().any(|&a| !(a >= 0.0) || !a.is_finite()) {
            return bad("damping_grid entries must be finite and >= 0");
        }
        if self.krylov_k == 0 || self.probe_k == 0 {
            return bad("krylov_k and probe_k must be >= 1");
        }
        if self.inner_steps == 0 || self.outer_steps == 0 {
            return bad("inner_steps and outer_steps must be >= 1");
        }
        if !(self.momentum >= 0.0 && self.momentum < 1.0) {
            return bad("momentum must lie in [0, 1)");
        }
        if matches!(self.method, Method::Gd | Method::Msgd)
            && !(self.learning_rate > 0.0 && self.learning_rate.is_finite())
        {
            return bad("learning_rate must be positive");
        }
        if self.minibatch_size == Some(0) {
            return bad("minibatch_size must be >= 1");
        }
        if let Some(c) = self.clip_threshold {
            if !(c > 0.0) {
                return bad("clip_threshold must be positive");
            }
        }
        Ok(())
    }

    /// Damping grid sorted ascending with duplicates removed.
    pub fn sorted_grid(&self) -> Vec<f64> {
        let mut g = self.damping_grid.clone();
        g.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
        g.dedup();
        g
    }
}
