use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sfn_core::mlp::Loss;
use sfn_core::objectives::SurfaceKind;
use sfn_core::optimizers::{Method, OptimizerConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Optimize,
    Compare,
    CriticalPoints,
    Spectrum,
    Search,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Optimize => "optimize",
            Self::Compare => "compare",
            Self::CriticalPoints => "critical_points",
            Self::Spectrum => "spectrum",
            Self::Search => "search",
        }
    }
}

/// A whole experiment as read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional in the file; the subcommand decides when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    #[serde(default)]
    pub seed: u64,
    pub objective: ObjectiveConfig,
    /// Starting point. Networks default to their seeded init and random
    /// quadratics to the origin; other surfaces need one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub optimizers: Vec<OptimizerConfig>,
    /// `compare` only: one network per hidden size.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hidden_sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_points: Option<CriticalPointsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSpec>,
    /// Where artifacts go; left out of the embedded config so reruns into
    /// other directories stay byte-identical.
    #[serde(default = "default_output_dir", skip_serializing)]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    Surface {
        surface: SurfaceKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        /// Matrix seed for `gaussian_quadratic`; derived when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix_seed: Option<u64>,
    },
    Mlp {
        hidden_units: usize,
        loss: Loss,
        #[serde(default = "default_init_range")]
        init_range: f64,
        /// Derived when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        init_seed: Option<u64>,
        dataset: DatasetConfig,
    },
}

fn default_init_range() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    Blobs {
        classes: usize,
        per_class: usize,
        dim: usize,
        separation: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        limit: Option<usize>,
        /// `[rows, cols]` of the area-averaged images.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        downsample: Option<[usize; 2]>,
    },
}

/// Random hyperparameter search over `msgd` settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Sampled log-uniformly.
    #[serde(default = "default_lr_range")]
    pub learning_rate: [f64; 2],
    #[serde(default = "default_momentum_range")]
    pub momentum: [f64; 2],
    /// Categorical choices; `0` means full batch.
    #[serde(default = "default_minibatches")]
    pub minibatch_sizes: Vec<usize>,
    /// Sampled log-uniformly when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_threshold: Option<[f64; 2]>,
}

fn default_samples() -> usize {
    80
}
fn default_lr_range() -> [f64; 2] {
    [1e-4, 1.0]
}
fn default_momentum_range() -> [f64; 2] {
    [0.0, 0.99]
}
fn default_minibatches() -> Vec<usize> {
    vec![0]
}

impl Default for SearchSpec {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            learning_rate: default_lr_range(),
            momentum: default_momentum_range(),
            minibatch_sizes: default_minibatches(),
            clip_threshold: None,
        }
    }
}

impl SearchSpec {
    fn validate(&self) -> Result<(), CliError> {
        let [lo, hi] = self.learning_rate;
        if self.samples == 0 {
            return Err(CliError::config("search.samples must be at least 1"));
        }
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(CliError::config("search.learning_rate must be 0 < lo <= hi"));
        }
        let [mlo, mhi] = self.momentum;
        if !(0.0..1.0).contains(&mlo) || !(mlo..1.0).contains(&mhi) {
            return Err(CliError::config("search.momentum must satisfy 0 <= lo <= hi < 1"));
        }
        if self.minibatch_sizes.is_empty() {
            return Err(CliError::config("search.minibatch_sizes is empty"));
        }
        if let Some([clo, chi]) = self.clip_threshold {
            if !(clo > 0.0 && clo <= chi && chi.is_finite()) {
                return Err(CliError::config("search.clip_threshold must be 0 < lo <= hi"));
            }
        }
        Ok(())
    }
}

/// Sampling protocol for `critical_points`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalPointsSpec {
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    /// Training runs whose snapshots seed half the jobs.
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Optimizer for the training runs; defaults to a short `msgd` run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<OptimizerConfig>,
    #[serde(default = "default_amplitudes")]
    pub amplitudes: Vec<f64>,
    #[serde(default = "default_cube_range")]
    pub cube_range: f64,
    #[serde(default = "default_max_snapshot_epoch")]
    pub max_snapshot_epoch: usize,
    #[serde(default = "default_finder_tol")]
    pub tol: f64,
    #[serde(default = "default_finder_iters")]
    pub max_iters: usize,
    /// Emit one spectrum histogram per converged point when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram_bins: Option<usize>,
}

fn default_jobs() -> usize {
    100
}
fn default_runs() -> usize {
    4
}
fn default_amplitudes() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}
fn default_cube_range() -> f64 {
    1.0
}
fn default_max_snapshot_epoch() -> usize {
    20
}
fn default_finder_tol() -> f64 {
    1e-8
}
fn default_finder_iters() -> usize {
    500
}

impl Default for CriticalPointsSpec {
    fn default() -> Self {
        Self {
            jobs: default_jobs(),
            runs: default_runs(),
            training: None,
            amplitudes: default_amplitudes(),
            cube_range: default_cube_range(),
            max_snapshot_epoch: default_max_snapshot_epoch(),
            tol: default_finder_tol(),
            max_iters: default_finder_iters(),
            histogram_bins: None,
        }
    }
}

/// Default training run behind the snapshot-perturbation starts.
pub fn default_training() -> OptimizerConfig {
    let mut cfg = OptimizerConfig::new(Method::Msgd);
    cfg.learning_rate = 0.1;
    cfg.momentum = 0.9;
    cfg.minibatch_size = Some(2);
    cfg.max_epochs = 20;
    cfg
}

/// Hessian spectrum at the start point or at the critical point found from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub find_critical_point: bool,
}

fn default_bins() -> usize {
    50
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        Self { bins: default_bins(), find_critical_point: false }
    }
}

/// Seed for a named sub-stream of the master seed (FNV-1a of the label,
/// mixed with a splitmix64 finalizer).
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = master ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Fills every derived or defaulted value so the result fully describes
    /// the run, then validates it. Resolving twice is a no-op.
    pub fn resolve(mut self, kind: ExperimentKind) -> Result<Self, CliError> {
        match self.kind {
            Some(k) if k != kind => {
                return Err(CliError::Config(format!(
                    "config is for `{}`, not `{}`",
                    k.name(),
                    kind.name()
                )))
            }
            _ => self.kind = Some(kind),
        }
        let master = self.seed;
        match &mut self.objective {
            ObjectiveConfig::Surface { surface, n, matrix_seed } => {
                if *surface == SurfaceKind::GaussianQuadratic {
                    if n.is_none() {
                        return Err(CliError::config("gaussian_quadratic needs `n`"));
                    }
                    matrix_seed.get_or_insert(derive_seed(master, "matrix"));
                }
                if !self.hidden_sizes.is_empty() {
                    return Err(CliError::config("hidden_sizes needs an mlp objective"));
                }
            }
            ObjectiveConfig::Mlp { hidden_units, init_range, init_seed, dataset, .. } => {
                if *hidden_units == 0 || !(init_range.is_finite() && *init_range >= 0.0) {
                    return Err(CliError::config("mlp needs hidden_units > 0 and a finite init_range >= 0"));
                }
                init_seed.get_or_insert(derive_seed(master, "init"));
                match dataset {
                    DatasetConfig::Blobs { classes, per_class, dim, separation, seed } => {
                        if *classes == 0 || *per_class == 0 || *dim == 0 || !separation.is_finite() {
                            return Err(CliError::config("blobs need positive counts and a finite separation"));
                        }
                        seed.get_or_insert(derive_seed(master, "data"));
                    }
                    DatasetConfig::Idx { downsample, .. } => {
                        if matches!(downsample, Some([0, _]) | Some([_, 0])) {
                            return Err(CliError::config("downsample sizes must be positive"));
                        }
                    }
                }
            }
        }
        if self.hidden_sizes.contains(&0) {
            return Err(CliError::config("hidden sizes must be positive"));
        }

        for (i, opt) in self.optimizers.iter_mut().enumerate() {
            if opt.seed == 0 {
                opt.seed = derive_seed(master, &format!("optimizer/{i}"));
            }
            opt.validate().map_err(|e| CliError::Config(format!("optimizers[{i}]: {e}")))?;
        }
        for (i, opt) in self.optimizers.iter().enumerate() {
            if self.optimizers[..i].iter().any(|o| o.method == opt.method) {
                return Err(CliError::Config(format!(
                    "method `{}` listed twice",
                    opt.method.name()
                )));
            }
        }

        match kind {
            ExperimentKind::Optimize => {
                if self.optimizers.len() != 1 {
                    return Err(CliError::config("optimize needs exactly one optimizer"));
                }
            }
            ExperimentKind::Compare => {
                if self.optimizers.is_empty() {
                    return Err(CliError::config("compare needs at least one optimizer"));
                }
            }
            ExperimentKind::Search => {
                if self.optimizers.len() != 1 || self.optimizers[0].method != Method::Msgd {
                    return Err(CliError::config("search needs exactly one msgd optimizer as its base"));
                }
                self.search.get_or_insert_with(SearchSpec::default);
            }
            ExperimentKind::CriticalPoints => {
                let spec = self.critical_points.get_or_insert_with(CriticalPointsSpec::default);
                if spec.jobs == 0 || !(spec.tol > 0.0) || spec.max_iters == 0 {
                    return Err(CliError::config("critical_points needs jobs, tol and max_iters positive"));
                }
                if spec.amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) || !(spec.cube_range > 0.0) {
                    return Err(CliError::config("amplitudes must be >= 0 and cube_range > 0"));
                }
                if spec.histogram_bins == Some(0) {
                    return Err(CliError::config("histogram_bins must be positive"));
                }
                let training = spec.training.get_or_insert_with(default_training);
                if training.seed == 0 {
                    training.seed = derive_seed(master, "training");
                }
                training
                    .validate()
                    .map_err(|e| CliError::Config(format!("critical_points.training: {e}")))?;
            }
            ExperimentKind::Spectrum => {
                let spec = self.spectrum.get_or_insert_with(SpectrumSpec::default);
                if spec.bins == 0 {
                    return Err(CliError::config("spectrum.bins must be positive"));
                }
            }
        }
        if let Some(search) = &self.search {
            search.validate()?;
        }
        if let (ObjectiveConfig::Surface { surface, .. }, None) = (&self.objective, &self.start) {
            if *surface != SurfaceKind::GaussianQuadratic {
                return Err(CliError::config("surface objectives need a `start` point"));
            }
        }
        Ok(self)
    }

    pub fn kind(&self) -> ExperimentKind {
        self.kind.unwrap_or(ExperimentKind::Optimize)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    /// The resolved config as `# `-prefixed lines for CSV headers.
    pub fn as_comment(&self) -> String {
        self.to_toml().lines().map(|l| format!("# {l}\n")).collect()
    }
}
