use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sfn_core::objectives::Objective;
use sfn_core::optimizers::{run, OptimizerConfig};

use crate::config::SearchSpec;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub id: usize,
    pub config: OptimizerConfig,
    /// Training loss after the last epoch; `None` when the run diverged.
    pub final_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Index into `trials` of the lowest final training loss.
    pub best: Option<usize>,
    pub trials: Vec<Trial>,
}

impl SearchOutcome {
    pub fn best_config(&self) -> Option<&OptimizerConfig> {
        self.best.map(|i| &self.trials[i].config)
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi { lo } else { rng.random_range(lo.ln()..hi.ln()).exp() }
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi { lo } else { rng.random_range(lo..hi) }
}

/// Draws `spec.samples` settings from `base`, runs them all and keeps the one
/// with the lowest final training loss. Ties go to the earlier trial.
///
/// Samples are drawn up front from a `seed`-keyed stream, so the outcome does
/// not depend on how the runs are scheduled.
pub fn random_search<O>(
    obj: &O,
    theta0: &[f64],
    base: &OptimizerConfig,
    spec: &SearchSpec,
    seed: u64,
) -> Result<SearchOutcome, CliError>
where
    O: Objective<f64> + ?Sized,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let configs: Vec<OptimizerConfig> = (0..spec.samples)
        .map(|_| {
            let mut cfg = base.clone();
            cfg.learning_rate = log_uniform(&mut rng, spec.learning_rate);
            cfg.momentum = uniform(&mut rng, spec.momentum);
            let batch = spec.minibatch_sizes[rng.random_range(0..spec.minibatch_sizes.len())];
            cfg.minibatch_size = (batch > 0).then_some(batch);
            cfg.clip_threshold = spec.clip_threshold.map(|range| log_uniform(&mut rng, range));
            cfg
        })
        .collect();

    let results: Vec<Result<Trial, CliError>> = configs
        .into_par_iter()
        .enumerate()
        .map(|(id, config)| {
            let out = run(obj, theta0, &config)?;
            let last = out.log.last().map_or_else(|| obj.eval(theta0), |r| r.error);
            let final_error = (!out.log.diverged && last.is_finite()).then_some(last);
            Ok(Trial { id, config, final_error })
        })
        .collect();
    let trials = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut best: Option<usize> = None;
    for (i, t) in trials.iter().enumerate() {
        if let Some(e) = t.final_error {
            if best.is_none_or(|b| e < trials[b].final_error.expect("best is finite")) {
                best = Some(i);
            }
        }
    }
    Ok(SearchOutcome { best, trials })
}

pub const TRIALS_HEADER: &str = "trial,learning_rate,momentum,minibatch_size,clip_threshold,final_error,diverged";

/// One row per trial; empty cells for full batch, no clipping or divergence.
pub fn trials_csv(trials: &[Trial]) -> String {
    let mut out = format!("{TRIALS_HEADER}\n");
    for t in trials {
        let c = &t.config;
        out.push_str(&format!(
            "{},{:e},{:e},{},{},{},{}\n",
            t.id,
            c.learning_rate,
            c.momentum,
            c.minibatch_size.map_or(String::new(), |b| b.to_string()),
            c.clip_threshold.map_or(String::new(), |v| format!("{v:e}")),
            t.final_error.map_or(String::new(), |v| format!("{v:e}")),
            t.final_error.is_none(),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use sfn_core::objectives::{make_surface, SurfaceKind, SurfaceSpec};
    use sfn_core::optimizers::Method;

    fn gutter_search(samples: usize, lr: [f64; 2], momentum: [f64; 2]) -> SearchOutcome {
        let s = make_surface::<f64>(&SurfaceSpec::new(SurfaceKind::Gutter)).unwrap();
        let mut base = OptimizerConfig::new(Method::Msgd);
        base.max_epochs = 20;
        let spec = SearchSpec { samples, learning_rate: lr, momentum, ..SearchSpec::default() };
        random_search(&s, &[1.5, 0.5], &base, &spec, 9).unwrap()
    }

    #[test]
    fn best_is_minimal_and_deterministic() {
        let a = gutter_search(12, [1e-4, 1e-1], [0.0, 0.9]);
        let b = gutter_search(12, [1e-4, 1e-1], [0.0, 0.9]);
        assert_eq!(a, b);
        let best = a.trials[a.best.unwrap()].final_error.unwrap();
        assert!(a.trials.iter().filter_map(|t| t.final_error).all(|e| e >= best));
        assert_eq!(trials_csv(&a.trials).lines().count(), 13);
    }

    #[test]
    fn ties_go_to_the_earlier_trial() {
        let out = gutter_search(4, [1e-3, 1e-3], [0.5, 0.5]);
        assert_eq!(out.best, Some(0));
    }

    #[test]
    fn all_diverged_has_no_best() {
        let out = gutter_search(3, [1e6, 1e7], [0.0, 0.9]);
        assert_eq!(out.best, None);
        assert!(trials_csv(&out.trials).contains(",true"));
    }
}
