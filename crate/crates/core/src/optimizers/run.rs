use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::krylov::{damped_newton_subspace_step, sfn_krylov_step};
use super::steps::{damped_newton_step, gd_step, msgd_step, sfn_exact_step};
use super::{EpochRecord, Method, OptimError, OptimizerConfig, TrajectoryLog};
use crate::numerics::{lanczos, subspace_hessian, sym_eigvals, vector};
use crate::objectives::Objective;
use crate::Scalar;

/// Largest dimension for which `λ_min` is logged from a dense
/// eigendecomposition; above it a Lanczos estimate is used.
pub const DENSE_LAMBDA_CAP: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome<T> {
    pub log: TrajectoryLog<T>,
    pub theta: Vec<T>,
    /// Parameters before epoch 1 and after every logged epoch, when requested.
    pub snapshots: Vec<Vec<T>>,
}

/// Most negative curvature at `theta`: exact for small dense problems,
/// otherwise the smallest Ritz value of a `probe_k`-step Lanczos run from a
/// seeded random start.
pub fn lambda_min<T, O>(obj: &O, theta: &[T], probe_k: usize, seed: u64) -> Result<T, OptimError>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    if obj.dim() <= DENSE_LAMBDA_CAP {
        if let Some(h) = obj.dense_hessian(theta) {
            return Ok(*sym_eigvals(&h)?.last().expect("non-empty Hessian"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<T> = (0..obj.dim()).map(|_| T::lit(rng.random_range(-1.0..1.0))).collect();
    let basis = lanczos(|v| obj.hvp(theta, v), &start, probe_k.min(obj.dim()), None)?;
    Ok(*sym_eigvals(&subspace_hessian(&basis))?.last().expect("non-empty basis"))
}

pub fn run<T, O>(obj: &O, theta0: &[T], cfg: &OptimizerConfig) -> Result<RunOutcome<T>, OptimError>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    run_with(obj, theta0, cfg, false)
}

/// Runs `cfg.method` for up to `max_epochs` epochs, logging after each one.
///
/// An epoch is one pass over the minibatches for `msgd`, one full-batch step
/// for `gd`, `damped_newton` and `sfn_exact`, and `outer_steps` Krylov bases
/// for `sfn_krylov`. The loop stops early when the full gradient norm drops
/// below `grad_tol`. Divergence truncates the log and sets its flag; only a
/// bad configuration or a dimension mismatch is an `Err`.
pub fn run_with<T, O>(
    obj: &O,
    theta0: &[T],
    cfg: &OptimizerConfig,
    keep_snapshots: bool,
) -> Result<RunOutcome<T>, OptimError>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    cfg.validate()?;
    if theta0.len() != obj.dim() {
        return Err(OptimError::InvalidConfig(format!(
            "start has {} parameters, objective {}",
            theta0.len(),
            obj.dim()
        )));
    }
    if cfg.method == Method::SfnExact && !obj.has_dense_hessian() {
        return Err(OptimError::DenseHessianUnavailable(obj.dim()));
    }

    let lr = T::lit(cfg.learning_rate);
    let momentum = T::lit(cfg.momentum);
    let clip = cfg.clip_threshold.map(T::lit);
    let grad_tol = T::lit(cfg.grad_tol);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..obj.sample_count()).collect();

    let mut theta = theta0.to_vec();
    let mut velocity = vec![T::zero(); theta.len()];
    let mut prev_step: Option<Vec<T>> = None;
    let mut log = TrajectoryLog::default();
    let mut snapshots = if keep_snapshots { vec![theta.clone()] } else { Vec::new() };
    let mut grad_norm = vector::norm(&obj.grad(&theta));

    for epoch in 1..=cfg.max_epochs {
        if !grad_norm.is_finite() {
            log.diverged = true;
            break;
        }
        if grad_norm < grad_tol {
            break;
        }
        let clock = Instant::now();
        let start = theta.clone();
        let stepped: Result<(), OptimError> = (|| {
            match cfg.method {
                Method::Gd => theta = gd_step(obj, &theta, lr, clip)?,
                Method::Msgd => {
                    let batch = cfg.minibatch_size.filter(|&b| b < order.len());
                    match batch {
                        Some(size) => {
                            order.shuffle(&mut shuffle_rng);
                            for chunk in order.chunks(size) {
                                let (t, v) = msgd_step(
                                    obj, &theta, &velocity, lr, momentum, Some(chunk), clip,
                                )?;
                                theta = t;
                                velocity = v;
                            }
                        }
                        None => {
                            let (t, v) =
                                msgd_step(obj, &theta, &velocity, lr, momentum, None, clip)?;
                            theta = t;
                            velocity = v;
                        }
                    }
                }
                Method::DampedNewton => {
                    theta = if obj.has_dense_hessian() {
                        damped_newton_step(
                            obj,
                            &theta,
                            &cfg.damping_grid,
                            cfg.force_positive_definite,
                            clip,
                        )?
                        .theta
                    } else {
                        damped_newton_subspace_step(obj, &theta, cfg)?.theta
                    };
                }
                Method::SfnExact => {
                    theta = sfn_exact_step(obj, &theta, &cfg.damping_grid, clip)?.theta;
                }
                Method::SfnKrylov => {
                    for _ in 0..cfg.outer_steps {
                        let step = sfn_krylov_step(obj, &theta, prev_step.as_deref(), cfg)?;
                        theta = step.theta;
                        prev_step = step.prev_step;
                    }
                }
            }
            Ok(())
        })();
        match stepped {
            Ok(()) => {}
            Err(OptimError::Diverged(_)) => {
                log.diverged = true;
                break;
            }
            Err(e) => return Err(e),
        }

        let error = obj.eval(&theta);
        let grad = obj.grad(&theta);
        grad_norm = vector::norm(&grad);
        if !error.is_finite() || !vector::all_finite(&theta) {
            log.diverged = true;
            break;
        }
        let probe_seed = cfg.seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let lam = match lambda_min(obj, &theta, cfg.probe_k, probe_seed) {
            Ok(l) => l,
            Err(OptimError::Linalg(_)) => T::nan(),
            Err(e) => return Err(e),
        };
        let wall_ms = if cfg.wall_clock { clock.elapsed().as_millis() as u64 } else { 0 };
        log.records.push(EpochRecord {
            epoch,
            error,
            grad_norm,
            lambda_min: lam,
            step_norm: vector::norm(&vector::sub(&theta, &start)),
            wall_ms,
        });
        if keep_snapshots {
            snapshots.push(theta.clone());
        }
    }
    Ok(RunOutcome { log, theta, snapshots })
}
