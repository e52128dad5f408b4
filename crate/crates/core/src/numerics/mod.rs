//! Small dense linear algebra: symmetric eigendecomposition, the spectral
//! absolute value, shifted solves and the Lanczos process.

mod eigen;
mod lanczos;
mod symmetric;
pub mod vector;

use thiserror::Error;

pub use eigen::{sym_eig, sym_eigvals, EigenDecomposition, SolveMode};
pub use lanczos::{lanczos, subspace_hessian, KrylovBasis};
pub use symmetric::DenseSymmetric;

use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix order must be at least 1")]
    Empty,
    #[error("eigensolver did not converge, off-diagonal residual {residual:e}")]
    NoConvergence { residual: f64 },
    #[error("shifted eigenvalue {eigenvalue:e} below solve floor {floor:e}")]
    SingularSystem { eigenvalue: f64, floor: f64 },
    #[error("initial Lanczos vector has zero norm")]
    ZeroInitialVector,
    #[error("invalid Krylov size {k} for dimension {n}")]
    InvalidBasisSize { k: usize, n: usize },
}

/// `|A| = V diag(|λ|) Vᵀ`.
pub fn abs_spectrum<T: Scalar>(a: &DenseSymmetric<T>) -> Result<DenseSymmetric<T>, LinalgError> {
    Ok(sym_eig(a)?.abs_matrix())
}

/// Solves `(A + shift·I) x = g` through the eigendecomposition of `A`.
///
/// The shifted matrix must be positive definite: every shifted eigenvalue has
/// to exceed `1e-12 · max(1, max|λ|)`, otherwise [`LinalgError::SingularSystem`]
/// is returned and the caller is expected to raise the shift.
pub fn shifted_inverse_apply<T: Scalar>(
    a: &DenseSymmetric<T>,
    shift: T,
    g: &[T],
) -> Result<Vec<T>, LinalgError> {
    sym_eig(a)?.solve_shifted(shift, g, SolveMode::PositiveDefinite)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abs_of_diagonal() {
        let a = DenseSymmetric::<f64>::from_diag(&[10.0, -2.0]);
        let abs = abs_spectrum(&a).unwrap();
        assert!((abs.get(0, 0) - 10.0).abs() < 1e-14);
        assert!((abs.get(1, 1) - 2.0).abs() < 1e-14);
        assert!(abs.get(0, 1).abs() < 1e-14);
    }

    #[test]
    fn abs_of_swap_is_identity() {
        let a = DenseSymmetric::<f64>::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let abs = abs_spectrum(&a).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((abs.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shifted_solves() {
        let a = DenseSymmetric::<f64>::from_diag(&[10.0, 2.0]);
        let x = shifted_inverse_apply(&a, 0.0, &[10.0, -2.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] + 1.0).abs() < 1e-14);
        let x = shifted_inverse_apply(&a, 1.0, &[11.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        let x = shifted_inverse_apply(&DenseSymmetric::<f64>::identity(2), 1.0, &[2.0, 2.0]).unwrap();
        assert_eq!(x, vec![1.0, 1.0]);
    }

    #[test]
    fn shifted_solve_rejects_indefinite() {
        let a = DenseSymmetric::<f64>::from_diag(&[10.0, -2.0]);
        let err = shifted_inverse_apply(&a, 1.0, &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, LinalgError::SingularSystem { .. }));
    }

    #[test]
    fn single_precision_abs() {
        let a = DenseSymmetric::<f32>::from_rows(&[vec![1.0, 2.0], vec![2.0, -3.0]]).unwrap();
        let abs = abs_spectrum(&a).unwrap();
        let e = sym_eig(&abs).unwrap();
        assert!(e.values().iter().all(|&l| l > 0.0));
    }
}
