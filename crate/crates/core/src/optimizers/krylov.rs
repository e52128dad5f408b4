use super::steps::{checked_grad, grid_step, Curvature, DampedStep};
use super::{OptimError, OptimizerConfig};
use crate::numerics::{lanczos, subspace_hessian, sym_eig, vector, EigenDecomposition, KrylovBasis};
use crate::objectives::Objective;
use crate::Scalar;

/// A Krylov basis and the eigendecomposition of the projected Hessian,
/// frozen for a sequence of subspace steps.
#[derive(Debug, Clone)]
pub struct SubspaceModel<T> {
    pub basis: KrylovBasis<T>,
    /// Eigenpairs of `Ĥ = V H Vᵀ` (signed).
    pub eig: EigenDecomposition<T>,
}

impl<T: Scalar> SubspaceModel<T> {
    /// Lanczos from the gradient at `theta`, optionally injecting `prev_step`
    /// as the last direction.
    pub fn build<O>(
        obj: &O,
        theta: &[T],
        grad: &[T],
        k: usize,
        prev_step: Option<&[T]>,
    ) -> Result<Self, OptimError>
    where
        O: Objective<T> + ?Sized,
    {
        let k = k.min(obj.dim());
        let basis = lanczos(|v| obj.hvp(theta, v), grad, k, prev_step)?;
        let eig = sym_eig(&subspace_hessian(&basis))?;
        Ok(Self { basis, eig })
    }

    /// One saddle-free step in the frozen subspace: the subspace gradient is
    /// recomputed at `theta`, the curvature is `|Ĥ|`, and λ is chosen from
    /// the grid by the true objective value.
    pub fn sfn_step<O>(
        &self,
        obj: &O,
        theta: &[T],
        grid: &[T],
        clip: Option<T>,
    ) -> Result<DampedStep<T>, OptimError>
    where
        O: Objective<T> + ?Sized,
    {
        let g = checked_grad(obj.grad(theta))?;
        grid_step(obj, theta, &g, &self.eig, Some(&self.basis), grid, Curvature::Absolute, clip)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovStep<T> {
    pub theta: Vec<T>,
    /// Displacement of the last inner step; seeds the next basis.
    pub prev_step: Option<Vec<T>>,
    pub damping: T,
    pub basis_size: usize,
}

fn grid_of<T: Scalar>(cfg: &OptimizerConfig) -> Result<Vec<T>, OptimError> {
    cfg.validate()?;
    Ok(cfg.sorted_grid().into_iter().map(T::lit).collect())
}

/// Approximate saddle-free Newton: one Krylov basis, then `inner_steps`
/// subspace steps with the projected Hessian held fixed.
///
/// A zero gradient returns `theta` unchanged with no new direction.
pub fn sfn_krylov_step<T, O>(
    obj: &O,
    theta: &[T],
    prev_step: Option<&[T]>,
    cfg: &OptimizerConfig,
) -> Result<KrylovStep<T>, OptimError>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    let grid = grid_of::<T>(cfg)?;
    let clip = cfg.clip_threshold.map(T::lit);
    let g = checked_grad(obj.grad(theta))?;
    if vector::norm(&g) == T::zero() {
        return Ok(KrylovStep { theta: theta.to_vec(), prev_step: None, damping: T::zero(), basis_size: 0 });
    }
    let prev = prev_step.filter(|p| vector::norm(p) > T::zero());
    let model = SubspaceModel::build(obj, theta, &g, cfg.krylov_k, prev)?;
    let mut current = theta.to_vec();
    let mut last = None;
    let mut damping = T::zero();
    for _ in 0..cfg.inner_steps {
        let step = model.sfn_step(obj, &current, &grid, clip)?;
        current = step.theta;
        damping = step.damping;
        last = Some(step.displacement);
    }
    Ok(KrylovStep { theta: current, prev_step: last, damping, basis_size: model.basis.len() })
}

/// Damped Newton restricted to a Krylov subspace of the gradient, for models
/// too large for a dense Hessian.
pub fn damped_newton_subspace_step<T, O>(
    obj: &O,
    theta: &[T],
    cfg: &OptimizerConfig,
) -> Result<DampedStep<T>, OptimError>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    let grid = grid_of::<T>(cfg)?;
    let clip = cfg.clip_threshold.map(T::lit);
    let g = checked_grad(obj.grad(theta))?;
    if vector::norm(&g) == T::zero() {
        let err = obj.eval(theta);
        return Ok(DampedStep {
            theta: theta.to_vec(),
            damping: T::zero(),
            error: err,
            displacement: vec![T::zero(); theta.len()],
        });
    }
    let model = SubspaceModel::build(obj, theta, &g, cfg.krylov_k, None)?;
    let curvature = Curvature::Signed { force_pd: cfg.force_positive_definite };
    grid_step(obj, theta, &g, &model.eig, Some(&model.basis), &grid, curvature, clip)
}
