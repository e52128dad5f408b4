use super::LinalgError;
use crate::Scalar;

/// Dense symmetric matrix stored row-major.
///
/// Construction symmetrizes the input as `(A + Aᵀ)/2`, so matrices assembled
/// from inexact Hessian-vector products are accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric<T> {
    order: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseSymmetric<T> {
    pub fn new(order: usize, mut data: Vec<T>) -> Result<Self, LinalgError> {
        if order == 0 {
            return Err(LinalgError::Empty);
        }
        if data.len() != order * order {
            return Err(LinalgError::DimensionMismatch {
                expected: order * order,
                found: data.len(),
            });
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(LinalgError::NonFinite("symmetric matrix"));
        }
        let half = T::lit(0.5);
        for i in 0..order {
            for j in (i + 1)..order {
                let m = (data[i * order + j] + data[j * order + i]) * half;
                data[i * order + j] = m;
                data[j * order + i] = m;
            }
        }
        Ok(Self { order, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(LinalgError::DimensionMismatch { expected: n, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::new(n, data)
    }

    pub fn from_fn(order: usize, f: impl Fn(usize, usize) -> T) -> Result<Self, LinalgError> {
        let mut data = Vec::with_capacity(order * order);
        for i in 0..order {
            for j in 0..order {
                data.push(f(i, j));
            }
        }
        Self::new(order, data)
    }

    /// Panics on an empty or non-finite diagonal.
    pub fn from_diag(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_fn(n, |i, j| if i == j { diag[i] } else { T::zero() })
            .expect("finite non-empty diagonal")
    }

    pub fn identity(order: usize) -> Self {
        Self::from_diag(&vec![T::one(); order])
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.order + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.order..(i + 1) * self.order]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.order).map(|i| super::vector::dot(self.row(i), x)).collect()
    }

    /// `xᵀ A x`
    pub fn quadratic_form(&self, x: &[T]) -> T {
        super::vector::dot(x, &self.mul_vec(x))
    }

    pub fn max_abs(&self) -> T {
        super::vector::max_abs(&self.data)
    }

    pub fn trace(&self) -> T {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    pub fn shifted(&self, shift: T) -> Self {
        let mut out = self.clone();
        for i in 0..self.order {
            out.data[i * self.order + i] += shift;
        }
        out
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { order: self.order, data: self.data.iter().map(|&x| x * s).collect() }
    }

    /// Principal submatrix on the given index set.
    pub fn submatrix(&self, idx: &[usize]) -> Result<Self, LinalgError> {
        Self::from_fn(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_symmetrizes() {
        let a = DenseSymmetric::<f64>::from_rows(&[vec![1.0, 2.0], vec![4.0, 3.0]]).unwrap();
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(1, 0), 3.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(DenseSymmetric::<f64>::new(0, vec![]), Err(LinalgError::Empty));
        assert!(matches!(
            DenseSymmetric::new(2, vec![1.0, f64::NAN, 0.0, 1.0]),
            Err(LinalgError::NonFinite(_))
        ));
        assert!(matches!(
            DenseSymmetric::new(2, vec![1.0; 3]),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn products() {
        let a = DenseSymmetric::<f64>::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert_eq!(a.mul_vec(&[1.0, -1.0]), vec![1.0, -2.0]);
        assert_eq!(a.quadratic_form(&[1.0, -1.0]), 3.0);
        assert_eq!(a.trace(), 5.0);
        assert_eq!(a.shifted(1.0).get(1, 1), 4.0);
    }
}
