use std::collections::VecDeque;

use thiserror::Error;

use super::stats::index_of;
use crate::numerics::{sym_eig, vector, EigenDecomposition, LinalgError};
use crate::objectives::Objective;
use crate::Scalar;

/// Levenberg-style trial steps per Hessian before giving up.
const MAX_DAMPING_TRIALS: usize = 40;

/// Eigenvalues below this fraction of `max(1, max|λ|)` are treated as null
/// directions and left out of the step.
const NULL_CUTOFF: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinderConfig {
    /// Converged once `‖∇L‖ ≤ tol`.
    pub tol: f64,
    pub max_iters: usize,
    /// A step counts as progress when `‖∇L‖` drops below the largest of the
    /// last `window` accepted values. `1` gives a strictly monotone search.
    pub window: usize,
}

impl Default for FinderConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_iters: 500, window: 50 }
    }
}

/// A (possibly unconverged) critical point with its full Hessian spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPointRecord<T> {
    pub theta: Vec<T>,
    /// Loss at `theta` over the full training set.
    pub error: T,
    pub grad_norm: T,
    /// Fraction of negative eigenvalues among the non-zero ones.
    pub index: T,
    pub zero_count: usize,
    pub eigen: EigenDecomposition<T>,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Scalar> CriticalPointRecord<T> {
    /// Hessian eigenvalues, descending.
    pub fn eigenvalues(&self) -> &[T] {
        self.eigen.values()
    }

    pub fn assemble<O>(obj: &O, theta: Vec<T>, iterations: usize, tol: T) -> Result<Self, FinderError<T>>
    where
        O: Objective<T> + ?Sized,
    {
        let h = obj
            .dense_hessian(&theta)
            .ok_or(FinderError::DenseHessianUnavailable(obj.dim()))?;
        let eigen = sym_eig(&h)?;
        let summary = index_of(eigen.values());
        let grad_norm = vector::norm(&obj.grad(&theta));
        Ok(Self {
            error: obj.eval(&theta),
            converged: grad_norm <= tol,
            grad_norm,
            index: summary.alpha,
            zero_count: summary.zero_count,
            eigen,
            iterations,
            theta,
        })
    }

    /// Checks the record invariants (index range and, for converged records,
    /// the gradient tolerance).
    pub fn validate(&self, tol: T) -> bool {
        let index_ok = self.index >= T::zero() && self.index <= T::one();
        let finite = self.error.is_finite() && vector::all_finite(&self.theta);
        index_ok && finite && (!self.converged || self.grad_norm <= tol)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FinderError<T: Scalar> {
    #[error("no critical point within the iteration cap; best gradient norm {:e}", .best.grad_norm)]
    NotConverged { best: Box<CriticalPointRecord<T>> },
    #[error("critical-point search needs a dense Hessian, unavailable for {0} parameters")]
    DenseHessianUnavailable(usize),
    #[error("non-finite start or objective value")]
    NonFinite,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Newton iteration on `∇L = 0` with Levenberg damping.
///
/// Trial steps have eigen-coordinates `−λᵢ cᵢ / (λᵢ² + μ)`, with `cᵢ` the
/// gradient coordinates: the Newton step `−H⁻¹∇L` at `μ = 0`, shortened along
/// weak directions as `μ` grows. Null directions (`|λᵢ|` below a relative
/// cutoff) are skipped, so a singular Hessian needs no special case. A step
/// is accepted when `‖∇L‖` falls below the largest of the last
/// `cfg.window` accepted norms, after which `μ /= 10` (flushed to zero when
/// tiny); otherwise `μ` grows tenfold. Nothing here prefers descent of `L`,
/// so saddles of any index are reachable.
///
/// On failure the returned record is the iterate with the smallest gradient.
pub fn find_critical_point<T, O>(
    obj: &O,
    theta0: &[T],
    cfg: &FinderConfig,
) -> Result<CriticalPointRecord<T>, FinderError<T>>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    let tol = T::lit(cfg.tol);
    if !vector::all_finite(theta0) {
        return Err(FinderError::NonFinite);
    }
    let mut theta = theta0.to_vec();
    let mut grad = obj.grad(&theta);
    let mut gnorm = vector::norm(&grad);
    if !gnorm.is_finite() {
        return Err(FinderError::NonFinite);
    }
    let mut best = (gnorm, theta.clone());
    let mut history = VecDeque::from([gnorm]);
    let mut mu = T::zero();
    let mut iterations = 0;

    while gnorm > tol && iterations < cfg.max_iters {
        iterations += 1;
        let h = obj
            .dense_hessian(&theta)
            .ok_or(FinderError::DenseHessianUnavailable(obj.dim()))?;
        let eig = sym_eig(&h)?;
        let scale = T::one().max(eig.max_abs_value());
        let base = T::lit(1e-6) * scale * scale;
        let cutoff = T::lit(NULL_CUTOFF) * scale;
        let coords = eig.coordinates(&grad);
        let reference = history.iter().copied().fold(gnorm, T::max);

        let mut accepted = false;
        for _ in 0..MAX_DAMPING_TRIALS {
            let step: Vec<T> = coords
                .iter()
                .zip(eig.values())
                .map(|(&c, &l)| if l.abs() <= cutoff { T::zero() } else { -l * c / (l * l + mu) })
                .collect();
            let candidate = vector::add(&theta, &eig.from_coordinates(&step));
            let g = obj.grad(&candidate);
            let n = vector::norm(&g);
            if n.is_finite() && n < reference {
                theta = candidate;
                grad = g;
                gnorm = n;
                history.push_back(n);
                if history.len() > cfg.window.max(1) {
                    history.pop_front();
                }
                if n < best.0 {
                    best = (n, theta.clone());
                }
                mu = mu / T::lit(10.0);
                if mu < base * T::lit(1e-6) {
                    mu = T::zero();
                }
                accepted = true;
                break;
            }
            mu = if mu == T::zero() { base } else { mu * T::lit(10.0) };
        }
        if !accepted {
            break;
        }
    }

    let final_theta = if gnorm <= tol { theta } else { best.1 };
    let record = CriticalPointRecord::assemble(obj, final_theta, iterations, tol)?;
    if record.converged {
        Ok(record)
    } else {
        Err(FinderError::NotConverged { best: Box::new(record) })
    }
}
