//! Saddle-free Newton optimization and critical-point analysis.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the type
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! experiment runner uses.

pub mod landscape;
pub mod mlp;
pub mod numerics;
pub mod objectives;
pub mod optimizers;
mod scalar;

pub use scalar::Scalar;

pub type Matrix = numerics::DenseSymmetric<f64>;
pub type Eigen = numerics::EigenDecomposition<f64>;
pub type Basis = numerics::KrylovBasis<f64>;
pub type Surface = objectives::Surface<f64>;
pub type Quadratic = objectives::Quadratic<f64>;
pub type Dataset = mlp::Dataset<f64>;
pub type Mlp = mlp::MlpObjective<f64>;
pub type Trajectory = optimizers::TrajectoryLog<f64>;
pub type RunOutcome = optimizers::RunOutcome<f64>;
pub type CriticalPoint = landscape::CriticalPointRecord<f64>;
