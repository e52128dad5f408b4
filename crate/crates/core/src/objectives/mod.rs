//! The objective contract and the built-in analytic test surfaces.

mod surfaces;

use thiserror::Error;

use crate::numerics::{vector, DenseSymmetric};
use crate::Scalar;

pub use surfaces::{make_surface, Quadratic, Surface, SurfaceKind, SurfaceSpec};

/// Largest parameter count for which a dense Hessian is assembled.
pub const DENSE_HESSIAN_CAP: usize = 2000;

/// Below this gradient scale derivative checks switch to absolute error.
pub const ABSOLUTE_CHECK_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("unknown surface kind `{0}`")]
    UnknownSurface(String),
    #[error("invalid surface parameters: {0}")]
    InvalidSpec(String),
}

/// A twice-differentiable loss over a flat parameter vector.
pub trait Objective<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, theta: &[T]) -> T;

    fn grad(&self, theta: &[T]) -> Vec<T>;

    /// Exact Hessian-vector product `H(θ)·v`.
    fn hvp(&self, theta: &[T], v: &[T]) -> Vec<T>;

    /// Number of training samples; zero for objectives without data.
    fn sample_count(&self) -> usize {
        0
    }

    /// Gradient of the loss restricted to the given samples.
    fn grad_batch(&self, theta: &[T], _batch: &[usize]) -> Vec<T> {
        self.grad(theta)
    }

    fn has_dense_hessian(&self) -> bool {
        self.dim() <= DENSE_HESSIAN_CAP
    }

    fn dense_hessian(&self, theta: &[T]) -> Option<DenseSymmetric<T>> {
        self.has_dense_hessian().then(|| assemble_hessian(self, theta))
    }
}

impl<T: Scalar, O: Objective<T> + ?Sized> Objective<T> for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, theta: &[T]) -> T {
        (**self).eval(theta)
    }
    fn grad(&self, theta: &[T]) -> Vec<T> {
        (**self).grad(theta)
    }
    fn hvp(&self, theta: &[T], v: &[T]) -> Vec<T> {
        (**self).hvp(theta, v)
    }
    fn sample_count(&self) -> usize {
        (**self).sample_count()
    }
    fn grad_batch(&self, theta: &[T], batch: &[usize]) -> Vec<T> {
        (**self).grad_batch(theta, batch)
    }
    fn has_dense_hessian(&self) -> bool {
        (**self).has_dense_hessian()
    }
    fn dense_hessian(&self, theta: &[T]) -> Option<DenseSymmetric<T>> {
        (**self).dense_hessian(theta)
    }
}

/// Dense Hessian built column by column from Hessian-vector products.
pub fn assemble_hessian<T, O>(obj: &O, theta: &[T]) -> DenseSymmetric<T>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    let n = obj.dim();
    let mut data = vec![T::zero(); n * n];
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e[j] = T::one();
        let col = obj.hvp(theta, &e);
        e[j] = T::zero();
        for (i, c) in col.into_iter().enumerate() {
            data[i * n + j] = c;
        }
    }
    DenseSymmetric::new(n, data).expect("finite Hessian")
}

/// Outcome of comparing an analytic derivative with finite differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeCheck<T> {
    /// `max|a − fd| / max(‖a‖∞, ‖fd‖∞)`, or the plain absolute error when
    /// both vectors are below [`ABSOLUTE_CHECK_THRESHOLD`].
    pub error: T,
    pub relative: bool,
}

impl<T: Scalar> DerivativeCheck<T> {
    fn compare(analytic: &[T], numeric: &[T]) -> Self {
        let diff = analytic
            .iter()
            .zip(numeric)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
        let scale = vector::max_abs(analytic).max(vector::max_abs(numeric));
        if scale < T::lit(ABSOLUTE_CHECK_THRESHOLD) {
            Self { error: diff, relative: false }
        } else {
            Self { error: diff / scale, relative: true }
        }
    }

    pub fn passes(&self, relative_tol: T) -> bool {
        if self.relative {
            self.error < relative_tol
        } else {
            self.error < T::lit(ABSOLUTE_CHECK_THRESHOLD)
        }
    }
}

/// Analytic gradient against central differences of `eval` with step `h`.
pub fn check_gradient<T, O>(obj: &O, theta: &[T], h: T) -> DerivativeCheck<T>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    assert!(h > T::zero(), "finite-difference step must be positive");
    let analytic = obj.grad(theta);
    let mut probe = theta.to_vec();
    let two_h = h + h;
    let numeric: Vec<T> = (0..theta.len())
        .map(|i| {
            probe[i] = theta[i] + h;
            let up = obj.eval(&probe);
            probe[i] = theta[i] - h;
            let down = obj.eval(&probe);
            probe[i] = theta[i];
            (up - down) / two_h
        })
        .collect();
    DerivativeCheck::compare(&analytic, &numeric)
}

/// Analytic `H·v` against `(∇L(θ+hv) − ∇L(θ−hv)) / 2h`.
pub fn check_hvp<T, O>(obj: &O, theta: &[T], v: &[T], h: T) -> DerivativeCheck<T>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    assert!(h > T::zero(), "finite-difference step must be positive");
    let analytic = obj.hvp(theta, v);
    let mut up = theta.to_vec();
    vector::axpy(h, v, &mut up);
    let mut down = theta.to_vec();
    vector::axpy(-h, v, &mut down);
    let inv = T::one() / (h + h);
    let numeric: Vec<T> =
        vector::sub(&obj.grad(&up), &obj.grad(&down)).into_iter().map(|d| d * inv).collect();
    DerivativeCheck::compare(&analytic, &numeric)
}
