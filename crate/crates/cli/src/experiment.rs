use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sfn_core::landscape::{
    find_critical_point, sample_critical_points, spectrum_histogram, summarize, FinderConfig, FinderError,
    SampledPoint, SamplingConfig, Snapshot,
};
use sfn_core::mlp::{downsample, load_idx, make_mlp, synth_blobs, MlpSpec};
use sfn_core::numerics::sym_eig;
use sfn_core::objectives::{make_surface, Objective, SurfaceKind, SurfaceSpec};
use sfn_core::optimizers::{run, run_with, Method, OptimizerConfig, RunOutcome};

use crate::config::{derive_seed, DatasetConfig, ExperimentConfig, ExperimentKind, ObjectiveConfig};
use crate::error::CliError;
use crate::search::{random_search, trials_csv};

/// A built objective plus its default starting point.
pub struct Problem {
    pub objective: Box<dyn Objective<f64>>,
    pub start: Vec<f64>,
    /// Present for network objectives.
    pub network: Option<MlpSpec>,
}

/// Builds the configured objective, overriding the hidden size when given.
pub fn build_problem(cfg: &ExperimentConfig, hidden: Option<usize>) -> Result<Problem, CliError> {
    let (objective, network, origin): (Box<dyn Objective<f64>>, Option<MlpSpec>, Option<Vec<f64>>) = match &cfg.objective {
        ObjectiveConfig::Surface { surface, n, matrix_seed } => {
            let spec = SurfaceSpec { kind: *surface, n: *n, seed: *matrix_seed };
            let surface = make_surface::<f64>(&spec)?;
            let origin = (spec.kind == SurfaceKind::GaussianQuadratic).then(|| vec![0.0; surface.dim()]);
            (Box::new(surface), None, origin)
        }
        ObjectiveConfig::Mlp { hidden_units, loss, init_range, init_seed, dataset } => {
            let data = match dataset {
                DatasetConfig::Blobs { classes, per_class, dim, separation, seed } => {
                    synth_blobs(*classes, *per_class, *dim, *separation, seed.unwrap_or(0))?
                }
                DatasetConfig::Idx { images, labels, limit, downsample: size } => {
                    let mut data = load_idx(images, labels)?;
                    if let Some(n) = limit {
                        data.truncate(*n);
                    }
                    match size {
                        Some([rows, cols]) => downsample(&data, *rows, *cols)?,
                        None => data,
                    }
                }
            };
            let spec = MlpSpec {
                input_dim: data.input_dim(),
                hidden_units: hidden.unwrap_or(*hidden_units),
                output_dim: data.output_dim(),
                loss: *loss,
                init_range: *init_range,
                seed: init_seed.unwrap_or(0),
            };
            (Box::new(make_mlp(spec.clone(), data)?), Some(spec), None)
        }
    };
    let start = match (&cfg.start, network.as_ref().map(MlpSpec::init_params)) {
        (Some(s), _) if hidden.is_none() => s.clone(),
        (_, Some(s)) => s,
        (Some(s), None) => s.clone(),
        (None, None) => origin.ok_or_else(|| CliError::config("no start point"))?,
    };
    if start.len() != objective.dim() {
        return Err(CliError::Config(format!(
            "start has {} entries, objective has {} parameters",
            start.len(),
            objective.dim()
        )));
    }
    Ok(Problem { objective, start, network })
}

struct Writer<'a> {
    dir: &'a Path,
    header: String,
    config: serde_json::Value,
    written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path, cfg: &ExperimentConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        Ok(Self {
            dir,
            header: cfg.as_comment(),
            config: serde_json::to_value(cfg).expect("config serializes"),
            written: Vec::new(),
        })
    }

    fn raw(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
        self.written.push(path);
        Ok(())
    }

    /// CSV with the resolved config as leading `# ` lines.
    fn csv(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let contents = format!("{}{body}", self.header);
        self.raw(name, &contents)
    }

    /// JSON object with the resolved config under `"config"`.
    fn json(&mut self, name: &str, mut value: serde_json::Value) -> Result<(), CliError> {
        value["config"] = self.config.clone();
        let text = serde_json::to_string_pretty(&value).expect("json serializes") + "\n";
        self.raw(name, &text)
    }
}

/// Runs a resolved experiment and writes its artifacts to `out_dir`.
/// Returns the written paths in order.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut w = Writer::new(out_dir, cfg)?;
    match cfg.kind() {
        ExperimentKind::Optimize => optimize(cfg, &mut w)?,
        ExperimentKind::Compare => compare(cfg, &mut w)?,
        ExperimentKind::Search => search(cfg, &mut w)?,
        ExperimentKind::CriticalPoints => critical_points(cfg, &mut w)?,
        ExperimentKind::Spectrum => spectrum(cfg, &mut w)?,
    }
    Ok(w.written)
}

fn optimize(cfg: &ExperimentConfig, w: &mut Writer) -> Result<(), CliError> {
    let p = build_problem(cfg, None)?;
    let out = run(&*p.objective, &p.start, &cfg.optimizers[0])?;
    w.csv("trajectory.csv", &out.log.to_csv())
}

#[derive(Serialize)]
struct CompareRow {
    hidden_units: Option<usize>,
    method: &'static str,
    epochs: usize,
    final_error: Option<f64>,
    final_grad_norm: Option<f64>,
    final_lambda_min: Option<f64>,
    diverged: bool,
    learning_rate: f64,
    momentum: f64,
    minibatch_size: Option<usize>,
}

fn compare(cfg: &ExperimentConfig, w: &mut Writer) -> Result<(), CliError> {
    let sizes: Vec<Option<usize>> = if cfg.hidden_sizes.is_empty() {
        vec![None]
    } else {
        cfg.hidden_sizes.iter().map(|&h| Some(h)).collect()
    };
    let mut rows = Vec::new();
    for size in sizes {
        let p = build_problem(cfg, size)?;
        let prefix = size.map_or(String::new(), |h| format!("h{h}_"));
        for opt in &cfg.optimizers {
            let chosen = match (&cfg.search, opt.method) {
                (Some(spec), Method::Msgd) => {
                    let seed = derive_seed(cfg.seed, &format!("search/{prefix}"));
                    let outcome = random_search(&*p.objective, &p.start, opt, spec, seed)?;
                    w.csv(&format!("{prefix}search.csv"), &trials_csv(&outcome.trials))?;
                    outcome.best_config().cloned().ok_or(CliError::SearchDiverged(outcome.trials.len()))?
                }
                _ => opt.clone(),
            };
            let out = run(&*p.objective, &p.start, &chosen)?;
            w.csv(&format!("{prefix}{}.csv", opt.method.name()), &out.log.to_csv())?;
            rows.push(compare_row(size, &chosen, &out));
        }
    }
    w.json("summary.json", json!({ "results": rows }))
}

fn compare_row(size: Option<usize>, cfg: &OptimizerConfig, out: &RunOutcome<f64>) -> CompareRow {
    let last = out.log.last();
    CompareRow {
        hidden_units: size,
        method: cfg.method.name(),
        epochs: out.log.records.len(),
        final_error: last.map(|r| r.error),
        final_grad_norm: last.map(|r| r.grad_norm),
        final_lambda_min: last.map(|r| r.lambda_min),
        diverged: out.log.diverged,
        learning_rate: cfg.learning_rate,
        momentum: cfg.momentum,
        minibatch_size: cfg.minibatch_size,
    }
}

fn search(cfg: &ExperimentConfig, w: &mut Writer) -> Result<(), CliError> {
    let p = build_problem(cfg, None)?;
    let spec = cfg.search.as_ref().expect("resolved search spec");
    let outcome = random_search(&*p.objective, &p.start, &cfg.optimizers[0], spec, derive_seed(cfg.seed, "search"))?;
    w.csv("trials.csv", &trials_csv(&outcome.trials))?;
    let best = outcome.best.ok_or(CliError::SearchDiverged(outcome.trials.len()))?;
    let trial = &outcome.trials[best];
    w.json(
        "best.json",
        json!({ "trial": trial.id, "final_error": trial.final_error, "optimizer": trial.config }),
    )
}

pub const CRITICAL_POINTS_HEADER: &str =
    "job_id,provenance,converged,epsilon,grad_norm,alpha,zero_count,n_eigs";

fn critical_points(cfg: &ExperimentConfig, w: &mut Writer) -> Result<(), CliError> {
    let spec = cfg.critical_points.as_ref().expect("resolved critical_points spec");
    let training = spec.training.as_ref().expect("resolved training config");
    let p = build_problem(cfg, None)?;
    let obj = &*p.objective;

    let mut snapshots = Vec::new();
    for run_id in 0..spec.runs {
        let start = match &p.network {
            Some(spec) => MlpSpec { seed: derive_seed(spec.seed, &format!("run/{run_id}")), ..spec.clone() }.init_params(),
            None => p.start.clone(),
        };
        let mut train = training.clone();
        train.seed = derive_seed(training.seed, &format!("run/{run_id}"));
        let out = run_with(obj, &start, &train, true)?;
        snapshots.extend(
            out.snapshots
                .into_iter()
                .enumerate()
                .map(|(epoch, theta)| Snapshot { run: run_id, epoch, theta }),
        );
    }

    let sampling = SamplingConfig {
        n_jobs: spec.jobs,
        cube_jobs: None,
        amplitudes: spec.amplitudes.clone(),
        cube_range: spec.cube_range,
        max_snapshot_epoch: spec.max_snapshot_epoch,
        seed: derive_seed(cfg.seed, "sampling"),
        finder: FinderConfig { tol: spec.tol, max_iters: spec.max_iters, ..FinderConfig::default() },
    };
    let points = sample_critical_points(obj, &snapshots, &sampling);

    w.csv("critical_points.csv", &points_csv(&points))?;
    w.csv("eigenvalues.csv", &eigenvalues_csv(&points, obj.dim()))?;
    let converged: Vec<_> = points.iter().filter(|p| p.converged()).filter_map(|p| p.record.as_ref()).collect();
    let failures: Vec<_> = points
        .iter()
        .filter_map(|p| p.failure.as_ref().map(|f| json!({ "job_id": p.job_id, "error": f })))
        .collect();
    w.json(
        "critical_points_summary.json",
        json!({
            "jobs": points.len(),
            "converged": converged.len(),
            "ensemble": summarize(&converged),
            "failures": failures,
        }),
    )?;
    if let Some(bins) = spec.histogram_bins {
        let histograms: Vec<_> = points
            .iter()
            .filter(|p| p.converged())
            .map(|p| {
                let r = p.record.as_ref().expect("converged record");
                json!({ "job_id": p.job_id, "histogram": spectrum_histogram(r.eigenvalues(), r.error, bins) })
            })
            .collect();
        w.json("histograms.json", json!({ "histograms": histograms }))?;
    }
    Ok(())
}

fn points_csv(points: &[SampledPoint<f64>]) -> String {
    let mut out = format!("{CRITICAL_POINTS_HEADER}\n");
    for p in points {
        let prov = p.provenance.label();
        match &p.record {
            Some(r) => out.push_str(&format!(
                "{},{prov},{},{:e},{:e},{:e},{},{}\n",
                p.job_id,
                r.converged,
                r.error,
                r.grad_norm,
                r.index,
                r.zero_count,
                r.eigenvalues().len()
            )),
            None => out.push_str(&format!("{},{prov},false,,,,,\n", p.job_id)),
        }
    }
    out
}

/// One row per job with a record: the Hessian eigenvalues, descending.
fn eigenvalues_csv(points: &[SampledPoint<f64>], dim: usize) -> String {
    let mut out = String::from("job_id");
    for i in 0..dim {
        out.push_str(&format!(",lambda_{i}"));
    }
    out.push('\n');
    for p in points {
        if let Some(r) = &p.record {
            out.push_str(&p.job_id.to_string());
            for l in r.eigenvalues() {
                out.push_str(&format!(",{l:e}"));
            }
            out.push('\n');
        }
    }
    out
}

fn spectrum(cfg: &ExperimentConfig, w: &mut Writer) -> Result<(), CliError> {
    let spec = cfg.spectrum.as_ref().expect("resolved spectrum spec");
    let p = build_problem(cfg, None)?;
    let obj = &*p.objective;
    let (source, theta, eigen) = if spec.find_critical_point {
        let record = match find_critical_point(obj, &p.start, &FinderConfig::default()) {
            Ok(r) => r,
            Err(FinderError::NotConverged { best }) => *best,
            Err(e) => return Err(e.into()),
        };
        ("critical_point", record.theta, record.eigen)
    } else {
        let h = obj
            .dense_hessian(&p.start)
            .ok_or(FinderError::<f64>::DenseHessianUnavailable(obj.dim()))?;
        let eigen = sym_eig(&h).map_err(FinderError::<f64>::from)?;
        ("start", p.start.clone(), eigen)
    };
    let eps = obj.eval(&theta);
    let values = eigen.values();
    let negative = values.iter().filter(|&&l| l < 0.0).count();
    w.json(
        "spectrum.json",
        json!({
            "source": source,
            "epsilon": eps,
            "grad_norm": sfn_core::numerics::vector::norm(&obj.grad(&theta)),
            "count": values.len(),
            "negative_fraction": negative as f64 / values.len() as f64,
            "min": eigen.min_value(),
            "max": eigen.max_value(),
            "histogram": spectrum_histogram(values, eps, spec.bins),
        }),
    )
}
