//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use sfn_cli::experiment::build_problem;
use sfn_cli::{run_experiment, ExperimentConfig, ExperimentKind};
use sfn_core::mlp::{make_mlp, synth_blobs, Loss, MlpSpec};
use sfn_core::numerics::{abs_spectrum, lanczos, subspace_hessian, sym_eigvals, vector, DenseSymmetric};
use sfn_core::objectives::{check_gradient, check_hvp, Objective, Quadratic};
use sfn_core::optimizers::{run, sfn_exact_step, sfn_krylov_step, Method, OptimizerConfig, RunOutcome};

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str, kind: ExperimentKind, seed: Option<u64>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::load(&configs().join(name)).expect("config parses");
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.resolve(kind).expect("config resolves")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).expect("artifact exists")).expect("valid json")
}

/// Experiments whose artifacts are rerun for the determinism check.
struct Artifacts {
    root: tempfile::TempDir,
    runs: Vec<(ExperimentConfig, String)>,
}

impl Artifacts {
    fn run(&mut self, cfg: ExperimentConfig, label: &str) -> PathBuf {
        let dir = self.root.path().join("first").join(label);
        run_experiment(&cfg, &dir).expect("experiment runs");
        self.runs.push((cfg, label.to_string()));
        dir
    }
}

fn absolute_value_inequality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let n = rng.random_range(1..=10);
        let entries: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = DenseSymmetric::from_fn(n, |i, j| entries[i.min(j) * n + i.max(j)]).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let abs = abs_spectrum(&a).unwrap();
        worst = worst.max(a.quadratic_form(&x).abs() - abs.quadratic_form(&x));
    }
    check(worst <= 1e-9, format!("max |xᵀAx| − xᵀ|A|x = {worst:.2e} over 1000 matrices"))
}

fn outcomes(cfg: &ExperimentConfig) -> Vec<(Method, RunOutcome<f64>)> {
    let p = build_problem(cfg, None).unwrap();
    cfg.optimizers.iter().map(|o| (o.method, run(&*p.objective, &p.start, o).unwrap())).collect()
}

fn by_method(runs: &[(Method, RunOutcome<f64>)], m: Method) -> &RunOutcome<f64> {
    &runs.iter().find(|(k, _)| *k == m).expect("method configured").1
}

fn classical_saddle(art: &mut Artifacts) -> Verdict {
    let cfg = load("classical_saddle.toml", ExperimentKind::Compare, None);
    art.run(cfg.clone(), "classical_saddle");
    let p = build_problem(&cfg, None).unwrap();
    let mut newton = cfg.optimizers.iter().find(|o| o.method == Method::DampedNewton).unwrap().clone();
    newton.max_epochs = 2;
    let newton_norm = vector::norm(&run(&*p.objective, &p.start, &newton).unwrap().theta);
    let runs = outcomes(&cfg);
    let sfn = by_method(&runs, Method::SfnExact).log.first_epoch_below(-10.0);
    let gd = by_method(&runs, Method::Gd).log.first_epoch_below(-10.0);
    let ok = newton_norm < 1e-8
        && sfn.is_some_and(|e| e <= 30)
        && match (sfn, gd) {
            (Some(s), Some(g)) => g > s,
            (Some(_), None) => true,
            _ => false,
        };
    check(ok, format!("newton ‖θ‖ after 2 steps = {newton_norm:.1e}; ε < −10 at epoch sfn {sfn:?}, gd {gd:?}"))
}

fn monkey_saddle(art: &mut Artifacts) -> Verdict {
    let cfg = load("monkey_saddle.toml", ExperimentKind::Compare, None);
    art.run(cfg.clone(), "monkey_saddle");
    let runs = outcomes(&cfg);
    let sfn = by_method(&runs, Method::SfnExact).log.first_epoch_below(-10.0);
    let newton = by_method(&runs, Method::DampedNewton);
    let newton_hit = newton.log.records.iter().take(100).position(|r| r.error < -1.0);
    let newton_best = newton.log.records.iter().take(100).map(|r| r.error).fold(f64::INFINITY, f64::min);
    check(
        sfn.is_some_and(|e| e <= 100) && newton_hit.is_none(),
        format!("sfn ε < −10 at epoch {sfn:?}; newton lowest ε in 100 steps = {newton_best:.2e}"),
    )
}

fn derivative_oracles() -> Verdict {
    let data = synth_blobs::<f64>(2, 4, 2, 1.0, 21).unwrap();
    let spec = MlpSpec { input_dim: 2, hidden_units: 8, output_dim: 2, loss: Loss::Mse, init_range: 1.0, seed: 22 };
    let theta: Vec<f64> = spec.init_params();
    let obj = make_mlp(spec, data).unwrap();
    let grad = check_gradient(&obj, &theta, 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let hvp = (0..5)
        .map(|_| {
            let v: Vec<f64> = (0..obj.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            check_hvp(&obj, &theta, &v, 1e-5).error
        })
        .fold(0.0, f64::max);
    let h = 1e-5;
    let dense = obj.dense_hessian(&theta).unwrap();
    let mut hess_err: f64 = 0.0;
    for j in 0..obj.dim() {
        let mut up = theta.clone();
        up[j] += h;
        let mut down = theta.clone();
        down[j] -= h;
        let col = vector::sub(&obj.grad(&up), &obj.grad(&down));
        for (i, c) in col.iter().enumerate() {
            hess_err = hess_err.max((dense.get(i, j) - c / (2.0 * h)).abs());
        }
    }
    check(
        grad.relative && grad.error < 1e-5 && hvp < 1e-5 && hess_err < 1e-4,
        format!(
            "{} params: gradient {:.1e}, hvp {hvp:.1e} (relative); Hessian max entry {hess_err:.1e}",
            obj.dim(),
            grad.error
        ),
    )
}

fn krylov_fidelity() -> Verdict {
    let mut eig_err: f64 = 0.0;
    let mut step_err: f64 = 0.0;
    for (i, n) in [5, 10, 20, 35, 50].into_iter().enumerate() {
        let q = Quadratic::gaussian_orthogonal(n, 100 + i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(200 + i as u64);
        let start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let basis = lanczos(|v| q.matrix().mul_vec(v), &start, n, None).unwrap();
        let ritz = sym_eigvals(&subspace_hessian(&basis)).unwrap();
        let exact = sym_eigvals(q.matrix()).unwrap();
        let scale = exact.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        for (r, e) in ritz.iter().zip(&exact) {
            eig_err = eig_err.max((r - e).abs() / scale);
        }
        let mut cfg = OptimizerConfig::new(Method::SfnKrylov);
        cfg.krylov_k = n;
        let exact_step = sfn_exact_step(&q, &start, &cfg.damping_grid, None).unwrap();
        let krylov_step = sfn_krylov_step(&q, &start, None, &cfg).unwrap();
        let diff = vector::norm(&vector::sub(&exact_step.theta, &krylov_step.theta));
        step_err = step_err.max(diff / vector::norm(&exact_step.theta).max(1.0));
    }
    check(
        eig_err < 1e-8 && step_err < 1e-8,
        format!("max relative Ritz error {eig_err:.1e}; max relative step difference {step_err:.1e}"),
    )
}

fn goe_spectrum(art: &mut Artifacts) -> Verdict {
    let mut fractions = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for seed in 1..=10 {
        let cfg = load("goe_spectrum.toml", ExperimentKind::Spectrum, Some(seed));
        let dir = art.run(cfg, &format!("goe_{seed}"));
        let s = read_json(&dir.join("spectrum.json"));
        fractions.push(s["negative_fraction"].as_f64().unwrap());
        lo = lo.min(s["min"].as_f64().unwrap());
        hi = hi.max(s["max"].as_f64().unwrap());
    }
    let (fmin, fmax) = fractions.iter().fold((1.0f64, 0.0f64), |(a, b), &f| (a.min(f), b.max(f)));
    check(
        fmin >= 0.45 && fmax <= 0.55 && lo >= -2.3 && hi <= 2.3,
        format!("negative fraction in [{fmin:.3}, {fmax:.3}]; support [{lo:.3}, {hi:.3}]"),
    )
}

fn critical_point_sweep(art: &mut Artifacts) -> Verdict {
    let cfg = load("critical_points.toml", ExperimentKind::CriticalPoints, None);
    let jobs = cfg.critical_points.as_ref().unwrap().jobs;
    let dir = art.run(cfg, "critical_points");
    let s = read_json(&dir.join("critical_points_summary.json"));
    let converged = s["converged"].as_u64().unwrap();
    let e = &s["ensemble"];
    let rho = e["spearman_error_index"].as_f64().unwrap_or(f64::NAN);
    let low = e["low_error_mean_eigenvalue"].as_f64().unwrap_or(f64::NAN);
    let high = e["high_error_mean_eigenvalue"].as_f64().unwrap_or(f64::NAN);
    check(
        jobs >= 100 && converged >= 50 && rho > 0.5 && high < low,
        format!(
            "{converged}/{jobs} converged; spearman ρ = {rho:.3}; mean eigenvalue top-ε quartile {high:.3} vs bottom {low:.3}"
        ),
    )
}

fn model_size(art: &mut Artifacts) -> Verdict {
    let cfg = load("model_size.toml", ExperimentKind::Compare, None);
    let dir = art.run(cfg.clone(), "model_size");
    let s = read_json(&dir.join("summary.json"));
    let rows = s["results"].as_array().unwrap();
    let field = |h: u64, m: &str, f: &str| {
        rows.iter()
            .find(|r| r["hidden_units"].as_u64() == Some(h) && r["method"] == m)
            .and_then(|r| r[f].as_f64())
    };
    let (mut error_wins, mut curvature_wins) = (0, 0);
    let mut detail = Vec::new();
    for &h in &cfg.hidden_sizes {
        let h = h as u64;
        let sfn = field(h, "sfn_krylov", "final_error").unwrap_or(f64::INFINITY);
        let beats = |m: &str| field(h, m, "final_error").is_none_or(|e| sfn <= e);
        if beats("msgd") && beats("damped_newton") {
            error_wins += 1;
        }
        let sfn_curv = field(h, "sfn_krylov", "final_lambda_min").map(f64::abs).unwrap_or(f64::INFINITY);
        let msgd_curv = field(h, "msgd", "final_lambda_min").map(f64::abs).unwrap_or(f64::INFINITY);
        if sfn_curv <= msgd_curv {
            curvature_wins += 1;
        }
        detail.push(format!(
            "h={h}: ε sfn {sfn:.1e} msgd {:.1e} newton {:.1e}",
            field(h, "msgd", "final_error").unwrap_or(f64::NAN),
            field(h, "damped_newton", "final_error").unwrap_or(f64::NAN)
        ));
    }
    check(
        error_wins >= 2 && curvature_wins >= 2,
        format!("ε wins {error_wins}/3, |λ_min| wins {curvature_wins}/3; {}", detail.join("; ")),
    )
}

fn determinism(art: &Artifacts) -> Verdict {
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for (cfg, label) in &art.runs {
        let first = art.root.path().join("first").join(label);
        let second = art.root.path().join("second").join(label);
        run_experiment(cfg, &second).expect("rerun succeeds");
        let mut names: Vec<_> = fs::read_dir(&first).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        let rerun_count = fs::read_dir(&second).unwrap().count();
        if rerun_count != names.len() {
            mismatches.push(format!("{label}: file count"));
        }
        for name in names {
            compared += 1;
            if fs::read(first.join(&name)).ok() != fs::read(second.join(&name)).ok() {
                mismatches.push(format!("{label}/{}", name.to_string_lossy()));
            }
        }
    }
    check(
        mismatches.is_empty() && compared > 0,
        format!("{compared} artifact files across {} experiments; mismatches: {mismatches:?}", art.runs.len()),
    )
}

fn main() -> ExitCode {
    let mut art = Artifacts { root: tempfile::tempdir().expect("temp dir"), runs: Vec::new() };
    let criteria: Vec<(&str, Option<Duration>, Box<dyn FnOnce(&mut Artifacts) -> Verdict>)> = vec![
        ("abs inequality", Some(Duration::from_secs(5)), Box::new(|_| absolute_value_inequality())),
        ("classical saddle", Some(Duration::from_secs(1)), Box::new(classical_saddle)),
        ("monkey saddle", Some(Duration::from_secs(1)), Box::new(monkey_saddle)),
        ("derivative oracles", Some(Duration::from_secs(30)), Box::new(|_| derivative_oracles())),
        ("krylov fidelity", Some(Duration::from_secs(10)), Box::new(|_| krylov_fidelity())),
        ("goe spectrum", Some(Duration::from_secs(30)), Box::new(goe_spectrum)),
        ("critical-point sweep", Some(Duration::from_secs(600)), Box::new(critical_point_sweep)),
        ("model size", Some(Duration::from_secs(1800)), Box::new(model_size)),
        ("determinism", None, Box::new(|a: &mut Artifacts| determinism(a))),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.into_iter().enumerate() {
        let clock = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(|| f(&mut art)))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let elapsed = clock.elapsed();
        let (mut ok, mut detail) = match verdict {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        if let Some(b) = budget.filter(|b| elapsed > *b) {
            ok = false;
            detail.push_str(&format!("; over the {}s budget", b.as_secs()));
        }
        failed += usize::from(!ok);
        println!(
            "criterion {} {:<22} {} ({:.2}s) {detail}",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
