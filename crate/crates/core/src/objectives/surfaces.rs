use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Objective, ObjectiveError};
use crate::numerics::{vector, DenseSymmetric};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    ClassicalSaddle,
    MonkeySaddle,
    Gutter,
    GaussianQuadratic,
}

impl FromStr for SurfaceKind {
    type Err = ObjectiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classical_saddle" => Ok(Self::ClassicalSaddle),
            "monkey_saddle" => Ok(Self::MonkeySaddle),
            "gutter" => Ok(Self::Gutter),
            "gaussian_quadratic" => Ok(Self::GaussianQuadratic),
            other => Err(ObjectiveError::UnknownSurface(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub kind: SurfaceKind,
    /// Dimension, gaussian_quadratic only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Matrix seed, gaussian_quadratic only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SurfaceSpec {
    pub fn new(kind: SurfaceKind) -> Self {
        Self { kind, n: None, seed: None }
    }

    pub fn gaussian(n: usize, seed: u64) -> Self {
        Self { kind: SurfaceKind::GaussianQuadratic, n: Some(n), seed: Some(seed) }
    }
}

/// `½ θᵀ M θ + bᵀ θ`
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic<T> {
    matrix: DenseSymmetric<T>,
    linear: Vec<T>,
}

impl<T: Scalar> Quadratic<T> {
    pub fn new(matrix: DenseSymmetric<T>, linear: Vec<T>) -> Self {
        assert_eq!(matrix.order(), linear.len(), "linear term dimension");
        Self { matrix, linear }
    }

    pub fn homogeneous(matrix: DenseSymmetric<T>) -> Self {
        let n = matrix.order();
        Self::new(matrix, vec![T::zero(); n])
    }

    /// Gaussian Orthogonal Ensemble draw: off-diagonal entries `N(0, 1/n)`,
    /// diagonal `N(0, 2/n)`, so the spectrum fills roughly `[-2, 2]`.
    pub fn gaussian_orthogonal(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let off = (1.0 / n as f64).sqrt();
        let diag = (2.0 / n as f64).sqrt();
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let z: f64 = StandardNormal.sample(&mut rng);
                let x = T::lit(z * if i == j { diag } else { off });
                data[i * n + j] = x;
                data[j * n + i] = x;
            }
        }
        Self::homogeneous(DenseSymmetric::new(n, data).expect("finite GOE draw"))
    }

    pub fn matrix(&self) -> &DenseSymmetric<T> {
        &self.matrix
    }
}

impl<T: Scalar> Objective<T> for Quadratic<T> {
    fn dim(&self) -> usize {
        self.matrix.order()
    }

    fn eval(&self, theta: &[T]) -> T {
        T::lit(0.5) * self.matrix.quadratic_form(theta) + vector::dot(&self.linear, theta)
    }

    fn grad(&self, theta: &[T]) -> Vec<T> {
        vector::add(&self.matrix.mul_vec(theta), &self.linear)
    }

    fn hvp(&self, _theta: &[T], v: &[T]) -> Vec<T> {
        self.matrix.mul_vec(v)
    }

    fn has_dense_hessian(&self) -> bool {
        true
    }

    fn dense_hessian(&self, _theta: &[T]) -> Option<DenseSymmetric<T>> {
        Some(self.matrix.clone())
    }
}

/// The analytic saddle surfaces and the random quadratic.
#[derive(Debug, Clone, PartialEq)]
pub enum Surface<T> {
    /// `5x² − y²`
    ClassicalSaddle,
    /// `x³ − 3xy²`
    MonkeySaddle,
    /// `(x² + y² − 1)²`, a circle of minima.
    Gutter,
    GaussianQuadratic(Quadratic<T>),
}

pub fn make_surface<T: Scalar>(spec: &SurfaceSpec) -> Result<Surface<T>, ObjectiveError> {
    match spec.kind {
        SurfaceKind::ClassicalSaddle => Ok(Surface::ClassicalSaddle),
        SurfaceKind::MonkeySaddle => Ok(Surface::MonkeySaddle),
        SurfaceKind::Gutter => Ok(Surface::Gutter),
        SurfaceKind::GaussianQuadratic => {
            let n = spec
                .n
                .ok_or_else(|| ObjectiveError::InvalidSpec("gaussian_quadratic needs `n`".into()))?;
            if n == 0 {
                return Err(ObjectiveError::InvalidSpec("gaussian_quadratic needs n >= 1".into()));
            }
            let seed = spec.seed.unwrap_or(0);
            Ok(Surface::GaussianQuadratic(Quadratic::gaussian_orthogonal(n, seed)))
        }
    }
}

impl<T: Scalar> Surface<T> {
    fn hessian_2d(&self, theta: &[T]) -> [[T; 2]; 2] {
        let c = T::lit;
        let (x, y) = (theta[0], theta[1]);
        match self {
            Self::ClassicalSaddle => [[c(10.0), T::zero()], [T::zero(), c(-2.0)]],
            Self::MonkeySaddle => [[c(6.0) * x, c(-6.0) * y], [c(-6.0) * y, c(-6.0) * x]],
            Self::Gutter => {
                let r = x * x + y * y - T::one();
                [
                    [c(4.0) * r + c(8.0) * x * x, c(8.0) * x * y],
                    [c(8.0) * x * y, c(4.0) * r + c(8.0) * y * y],
                ]
            }
            Self::GaussianQuadratic(_) => unreachable!("quadratic has its own Hessian"),
        }
    }
}

impl<T: Scalar> Objective<T> for Surface<T> {
    fn dim(&self) -> usize {
        match self {
            Self::GaussianQuadratic(q) => q.dim(),
            _ => 2,
        }
    }

    fn eval(&self, theta: &[T]) -> T {
        let c = T::lit;
        match self {
            Self::ClassicalSaddle => c(5.0) * theta[0].powi(2) - theta[1].powi(2),
            Self::MonkeySaddle => theta[0].powi(3) - c(3.0) * theta[0] * theta[1].powi(2),
            Self::Gutter => (theta[0].powi(2) + theta[1].powi(2) - T::one()).powi(2),
            Self::GaussianQuadratic(q) => q.eval(theta),
        }
    }

    fn grad(&self, theta: &[T]) -> Vec<T> {
        let c = T::lit;
        match self {
            Self::ClassicalSaddle => vec![c(10.0) * theta[0], c(-2.0) * theta[1]],
            Self::MonkeySaddle => {
                let (x, y) = (theta[0], theta[1]);
                vec![c(3.0) * x * x - c(3.0) * y * y, c(-6.0) * x * y]
            }
            Self::Gutter => {
                let (x, y) = (theta[0], theta[1]);
                let r = x * x + y * y - T::one();
                vec![c(4.0) * r * x, c(4.0) * r * y]
            }
            Self::GaussianQuadratic(q) => q.grad(theta),
        }
    }

    fn hvp(&self, theta: &[T], v: &[T]) -> Vec<T> {
        if let Self::GaussianQuadratic(q) = self {
            return q.hvp(theta, v);
        }
        let h = self.hessian_2d(theta);
        vec![h[0][0] * v[0] + h[0][1] * v[1], h[1][0] * v[0] + h[1][1] * v[1]]
    }

    fn has_dense_hessian(&self) -> bool {
        true
    }

    fn dense_hessian(&self, theta: &[T]) -> Option<DenseSymmetric<T>> {
        if let Self::GaussianQuadratic(q) = self {
            return q.dense_hessian(theta);
        }
        let h = self.hessian_2d(theta);
        Some(DenseSymmetric::from_rows(&[h[0].to_vec(), h[1].to_vec()]).expect("finite Hessian"))
    }
}
