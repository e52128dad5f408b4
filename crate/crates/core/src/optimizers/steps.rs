use super::OptimError;
use crate::numerics::{sym_eig, vector, EigenDecomposition, KrylovBasis, LinalgError, SolveMode};
use crate::objectives::Objective;
use crate::Scalar;

/// Result of a damping-grid step.
#[derive(Debug, Clone, PartialEq)]
pub struct DampedStep<T> {
    pub theta: Vec<T>,
    /// The damping value of the winning candidate.
    pub damping: T,
    pub error: T,
    /// `theta − θ_start`
    pub displacement: Vec<T>,
}

/// How the curvature eigenvalues enter the solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Curvature {
    /// `H + αI`, restricted to positive-definite shifts when the flag is set.
    Signed { force_pd: bool },
    /// `|H| + λI`
    Absolute,
}

/// Evaluates `θ − (C + αI)⁻¹ g` for each grid value and keeps the lowest
/// error, ties toward the smaller damping. `C` is described by `eig` in the
/// coordinates of `basis` (full space when `None`); with `Curvature::Absolute`
/// the eigenvalues are replaced by their magnitudes.
///
/// `grid` must be sorted ascending.
pub(crate) fn grid_step<T, O>(
    obj: &O,
    theta: &[T],
    grad: &[T],
    eig: &EigenDecomposition<T>,
    basis: Option<&KrylovBasis<T>>,
    grid: &[T],
    curvature: Curvature,
    clip: Option<T>,
) -> Result<DampedStep<T>, OptimError>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    let abs_eig;
    let eig = match curvature {
        Curvature::Absolute => {
            abs_eig = eig.abs_values();
            &abs_eig
        }
        Curvature::Signed { .. } => eig,
    };
    let mode = match curvature {
        Curvature::Signed { force_pd: false } => SolveMode::Nonsingular,
        _ => SolveMode::PositiveDefinite,
    };
    let reduced = match basis {
        Some(b) => b.project(grad),
        None => grad.to_vec(),
    };
    let floor = eig.solve_floor();
    let lambda_min = eig.min_value();

    let candidate = |alpha: T| -> Result<Option<(Vec<T>, T, Vec<T>)>, LinalgError> {
        let coords = eig.solve_shifted(alpha, &reduced, mode)?;
        let mut disp = match basis {
            Some(b) => b.lift(&coords),
            None => coords,
        };
        disp.iter_mut().for_each(|d| *d = -*d);
        if let Some(c) = clip {
            vector::clip_norm(&mut disp, c);
        }
        let next = vector::add(theta, &disp);
        let err = obj.eval(&next);
        Ok((err.is_finite() && vector::all_finite(&next)).then_some((next, err, disp)))
    };

    let mut admissible: Vec<T> = grid
        .iter()
        .copied()
        .filter(|&a| match mode {
            SolveMode::PositiveDefinite => lambda_min + a > floor,
            SolveMode::Nonsingular => true,
        })
        .collect();
    if admissible.is_empty() {
        admissible.push(raised_damping(lambda_min, grid[0], floor));
    }

    let mut best: Option<DampedStep<T>> = None;
    let mut any_solved = false;
    for &alpha in &admissible {
        match candidate(alpha) {
            Ok(Some((next, err, disp))) => {
                any_solved = true;
                if best.as_ref().is_none_or(|b| err < b.error) {
                    best = Some(DampedStep { theta: next, damping: alpha, error: err, displacement: disp });
                }
            }
            Ok(None) => any_solved = true,
            Err(LinalgError::SingularSystem { .. }) => {}
            Err(e) => return Err(e.into()),
        }
    }
    if !any_solved {
        // every grid shift was singular: fall back to a positive-definite one
        let alpha = raised_damping(lambda_min, grid[0], floor);
        let coords = eig.solve_shifted(alpha, &reduced, SolveMode::PositiveDefinite)?;
        let mut disp = match basis {
            Some(b) => b.lift(&coords),
            None => coords,
        };
        disp.iter_mut().for_each(|d| *d = -*d);
        if let Some(c) = clip {
            vector::clip_norm(&mut disp, c);
        }
        let next = vector::add(theta, &disp);
        let err = obj.eval(&next);
        if err.is_finite() {
            best = Some(DampedStep { theta: next, damping: alpha, error: err, displacement: disp });
        }
    }
    best.ok_or(OptimError::Diverged("all damping candidates non-finite"))
}

/// `|λ_min|·(1 + 1e-3) + smallest grid value`, nudged above the solve floor.
fn raised_damping<T: Scalar>(lambda_min: T, smallest: T, floor: T) -> T {
    let raised = lambda_min.abs() * T::lit(1.0 + 1e-3) + smallest;
    if lambda_min + raised > floor {
        raised
    } else {
        floor + floor - lambda_min
    }
}

pub(crate) fn checked_grad<T: Scalar>(g: Vec<T>) -> Result<Vec<T>, OptimError> {
    if vector::all_finite(&g) {
        Ok(g)
    } else {
        Err(OptimError::Diverged("non-finite gradient"))
    }
}

/// `θ − lr·∇L(θ)`, with the step rescaled to `clip` when longer.
pub fn gd_step<T, O>(obj: &O, theta: &[T], lr: T, clip: Option<T>) -> Result<Vec<T>, OptimError>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    let g = checked_grad(obj.grad(theta))?;
    let mut step = vector::scaled(-lr, &g);
    if let Some(c) = clip {
        vector::clip_norm(&mut step, c);
    }
    Ok(vector::add(theta, &step))
}

/// Classical momentum: `v' = μv − lr·∇L_batch(θ)`, `θ' = θ + v'`.
///
/// `batch = None` uses the full gradient. Clipping applies to the gradient
/// step before it enters the velocity.
pub fn msgd_step<T, O>(
    obj: &O,
    theta: &[T],
    velocity: &[T],
    lr: T,
    momentum: T,
    batch: Option<&[usize]>,
    clip: Option<T>,
) -> Result<(Vec<T>, Vec<T>), OptimError>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    let g = match batch {
        Some(b) => obj.grad_batch(theta, b),
        None => obj.grad(theta),
    };
    let g = checked_grad(g)?;
    let mut step = vector::scaled(-lr, &g);
    if let Some(c) = clip {
        vector::clip_norm(&mut step, c);
    }
    let v: Vec<T> = velocity.iter().zip(&step).map(|(&v, &s)| momentum * v + s).collect();
    Ok((vector::add(theta, &v), v))
}

fn dense_eig<T, O>(obj: &O, theta: &[T]) -> Result<EigenDecomposition<T>, OptimError>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    let h = obj.dense_hessian(theta).ok_or(OptimError::DenseHessianUnavailable(obj.dim()))?;
    Ok(sym_eig(&h)?)
}

fn to_grid<T: Scalar>(grid: &[f64]) -> Result<Vec<T>, OptimError> {
    if grid.is_empty() {
        return Err(OptimError::InvalidConfig("damping_grid must not be empty".into()));
    }
    let mut g: Vec<T> = grid.iter().map(|&a| T::lit(a)).collect();
    g.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    g.dedup();
    Ok(g)
}

/// Damped Newton: candidates `θ − (H + αI)⁻¹∇L` over the grid.
///
/// With `force_pd`, only shifts making `H + αI` positive definite are tried;
/// when none does, `α = |λ_min|·(1 + 1e-3) + min(grid)` is used instead.
pub fn damped_newton_step<T, O>(
    obj: &O,
    theta: &[T],
    grid: &[f64],
    force_pd: bool,
    clip: Option<T>,
) -> Result<DampedStep<T>, OptimError>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    let grid = to_grid::<T>(grid)?;
    let g = checked_grad(obj.grad(theta))?;
    let eig = dense_eig(obj, theta)?;
    grid_step(obj, theta, &g, &eig, None, &grid, Curvature::Signed { force_pd }, clip)
}

/// Exact saddle-free Newton: candidates `θ − (|H| + λI)⁻¹∇L` over the grid.
pub fn sfn_exact_step<T, O>(
    obj: &O,
    theta: &[T],
    grid: &[f64],
    clip: Option<T>,
) -> Result<DampedStep<T>, OptimError>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    let grid = to_grid::<T>(grid)?;
    let g = checked_grad(obj.grad(theta))?;
    let eig = dense_eig(obj, theta)?;
    grid_step(obj, theta, &g, &eig, None, &grid, Curvature::Absolute, clip)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DenseSymmetric;
    use crate::objectives::{make_surface, Quadratic, Surface, SurfaceKind, SurfaceSpec};

    fn saddle() -> Surface<f64> {
        make_surface(&SurfaceSpec::new(SurfaceKind::ClassicalSaddle)).unwrap()
    }

    #[test]
    fn gd_examples() {
        let s = saddle();
        let next = gd_step(&s, &[1.0, 1.0], 0.1, None).unwrap();
        assert!((next[0] - 0.0).abs() < 1e-15 && (next[1] - 1.2).abs() < 1e-15);
        assert_eq!(gd_step(&s, &[0.0, 0.0], 0.1, None).unwrap(), vec![0.0, 0.0]);
        // gradient (10, 0) at (1, 0): unclipped step has norm 10
        let next = gd_step(&s, &[1.0, 0.0], 1.0, Some(1.0)).unwrap();
        assert!((vector::norm(&vector::sub(&next, &[1.0, 0.0])) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn msgd_examples() {
        let s = saddle();
        let (th, v) = msgd_step(&s, &[1.0, 1.0], &[0.3, -0.2], 0.1, 0.0, None, None).unwrap();
        assert_eq!(th, gd_step(&s, &[1.0, 1.0], 0.1, None).unwrap());
        assert_eq!(v, vec![-1.0, 0.1 * 2.0]);
        let (_, v) = msgd_step(&s, &[0.0, 0.0], &[1.0, -2.0], 0.1, 0.9, None, None).unwrap();
        assert_eq!(v, vec![0.9, -1.8]);
    }

    #[test]
    fn msgd_slow_escape() {
        let s = saddle();
        let mut th = vec![1.0, 1.0];
        let mut v = vec![0.0, 0.0];
        for _ in 0..100 {
            (th, v) = msgd_step(&s, &th, &v, 0.01, 0.5, None, None).unwrap();
        }
        assert!(th[0].abs() < 1e-3);
        assert!(th[1].abs() >= 10.0, "y = {}", th[1]);
    }

    #[test]
    fn damped_newton_candidate_arithmetic() {
        let s = saddle();
        let step = damped_newton_step(&s, &[1.0, 1.0], &[3.0], true, None).unwrap();
        assert_eq!(step.damping, 3.0);
        let want = [-10.0 / 13.0, 2.0];
        for (d, w) in step.displacement.iter().zip(want) {
            assert!((d - w).abs() < 1e-14);
        }
    }

    #[test]
    fn damped_newton_raises_shift_when_grid_fails() {
        let s = saddle();
        let step = damped_newton_step(&s, &[1.0, 1.0], &[1e-3, 1.0], true, None).unwrap();
        assert!((step.damping - (2.0 * 1.001 + 1e-3)).abs() < 1e-12);
    }

    #[test]
    fn pure_newton_is_attracted() {
        let s = saddle();
        let step = damped_newton_step(&s, &[1.0, 1e-3], &[0.0], false, None).unwrap();
        assert_eq!(step.theta, vec![0.0, 0.0]);
    }

    #[test]
    fn newton_on_psd_quadratic_is_exact() {
        let m = DenseSymmetric::<f64>::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let q = Quadratic::new(m, vec![1.0, -1.0]);
        let step = damped_newton_step(&q, &[4.0, -7.0], &[0.0, 1.0], true, None).unwrap();
        assert_eq!(step.damping, 0.0);
        assert!(vector::norm(&q.grad(&step.theta)) < 1e-12);
        let sfn = sfn_exact_step(&q, &[4.0, -7.0], &[0.0], None).unwrap();
        assert!(vector::norm(&vector::sub(&sfn.theta, &step.theta)) < 1e-10);
    }

    #[test]
    fn sfn_flips_negative_curvature() {
        let s = saddle();
        let step = sfn_exact_step(&s, &[1.0, 1.0], &[0.0], None).unwrap();
        assert!((step.displacement[0] + 1.0).abs() < 1e-15);
        assert!((step.displacement[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sfn_doubles_y_on_saddle() {
        let s = saddle();
        let mut th = vec![1.0, 1e-6];
        for k in 1..=10 {
            th = sfn_exact_step(&s, &th, &[0.0], None).unwrap().theta;
            assert_eq!(th[0], 0.0);
            assert!((th[1] - 1e-6 * 2f64.powi(k)).abs() < 1e-18 * 2f64.powi(k));
        }
    }

    #[test]
    fn sfn_needs_dense_hessian() {
        struct Opaque;
        impl Objective<f64> for Opaque {
            fn dim(&self) -> usize {
                3
            }
            fn eval(&self, t: &[f64]) -> f64 {
                t.iter().map(|x| x * x).sum()
            }
            fn grad(&self, t: &[f64]) -> Vec<f64> {
                t.iter().map(|x| 2.0 * x).collect()
            }
            fn hvp(&self, _: &[f64], v: &[f64]) -> Vec<f64> {
                v.iter().map(|x| 2.0 * x).collect()
            }
            fn has_dense_hessian(&self) -> bool {
                false
            }
        }
        let err = sfn_exact_step(&Opaque, &[1.0, 2.0, 3.0], &[0.0], None).unwrap_err();
        assert_eq!(err, OptimError::DenseHessianUnavailable(3));
    }
}
