use super::{vector, DenseSymmetric, LinalgError};
use crate::Scalar;

/// Relative norm below which an orthogonalized Lanczos candidate is treated
/// as lying in the span of the current basis.
const BREAKDOWN_TOL: f64 = 1e-12;

/// Orthonormal Krylov vectors together with their memoized Hessian products.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovBasis<T> {
    vectors: Vec<Vec<T>>,
    products: Vec<Vec<T>>,
    requested: usize,
}

impl<T: Scalar> KrylovBasis<T> {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn requested(&self) -> usize {
        self.requested
    }

    /// Set when the recurrence hit an invariant subspace before `k` vectors.
    pub fn truncated(&self) -> bool {
        self.vectors.len() < self.requested
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vectors(&self) -> &[Vec<T>] {
        &self.vectors
    }

    /// `H·Vᵢ` for each basis vector.
    pub fn products(&self) -> &[Vec<T>] {
        &self.products
    }

    /// Subspace coordinates `V·x`.
    pub fn project(&self, x: &[T]) -> Vec<T> {
        self.vectors.iter().map(|v| vector::dot(v, x)).collect()
    }

    /// Full-space vector `Σ cᵢ Vᵢ`.
    pub fn lift(&self, coords: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        for (c, v) in coords.iter().zip(&self.vectors) {
            vector::axpy(*c, v, &mut out);
        }
        out
    }

    /// Largest `|Vᵢ·Vⱼ − δᵢⱼ|`.
    pub fn orthogonality_defect(&self) -> T {
        let mut worst = T::zero();
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate() {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((vector::dot(a, b) - target).abs());
            }
        }
        worst
    }
}

/// Builds up to `k` Lanczos vectors of the operator `hvp` started from `start`.
///
/// Every candidate is orthogonalized against the whole basis (two classical
/// Gram-Schmidt passes). When `prev_step` is given and `k ≥ 2`, the candidate
/// for the last vector is `prev_step` instead of the next Krylov direction;
/// if that vector already lies in the span, the Krylov direction is used.
/// Each `H·Vᵢ` is kept so the projected Hessian needs no further products.
pub fn lanczos<T, F>(
    mut hvp: F,
    start: &[T],
    k: usize,
    prev_step: Option<&[T]>,
) -> Result<KrylovBasis<T>, LinalgError>
where
    T: Scalar,
    F: FnMut(&[T]) -> Vec<T>,
{
    let n = start.len();
    if k == 0 || k > n {
        return Err(LinalgError::InvalidBasisSize { k, n });
    }
    if !vector::all_finite(start) {
        return Err(LinalgError::NonFinite("Lanczos start vector"));
    }
    let g_norm = vector::norm(start);
    if g_norm == T::zero() {
        return Err(LinalgError::ZeroInitialVector);
    }
    if let Some(p) = prev_step {
        if p.len() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, found: p.len() });
        }
    }

    let mut vectors = vec![vector::scaled(T::one() / g_norm, start)];
    let mut products: Vec<Vec<T>> = Vec::with_capacity(k);
    while vectors.len() < k {
        let w = hvp(&vectors[vectors.len() - 1]);
        if !vector::all_finite(&w) {
            return Err(LinalgError::NonFinite("Hessian-vector product"));
        }
        products.push(w.clone());
        let inject = vectors.len() == k - 1 && k >= 2;
        let next = match prev_step.filter(|_| inject) {
            Some(p) => orthonormalize(p, &vectors).or_else(|| orthonormalize(&w, &vectors)),
            None => orthonormalize(&w, &vectors),
        };
        match next {
            Some(v) => vectors.push(v),
            None => break,
        }
    }
    for j in products.len()..vectors.len() {
        let w = hvp(&vectors[j]);
        if !vector::all_finite(&w) {
            return Err(LinalgError::NonFinite("Hessian-vector product"));
        }
        products.push(w);
    }
    Ok(KrylovBasis { vectors, products, requested: k })
}

fn orthonormalize<T: Scalar>(candidate: &[T], basis: &[Vec<T>]) -> Option<Vec<T>> {
    let raw = vector::norm(candidate);
    if raw == T::zero() || !raw.is_finite() {
        return None;
    }
    let mut w = candidate.to_vec();
    for _ in 0..2 {
        for v in basis {
            let c = vector::dot(v, &w);
            vector::axpy(-c, v, &mut w);
        }
    }
    let r = vector::norm(&w);
    if r <= T::tol(BREAKDOWN_TOL) * raw {
        return None;
    }
    Some(vector::scaled(T::one() / r, &w))
}

/// Projected Hessian `Ĥᵢⱼ = Vᵢ·(H Vⱼ)` from the memoized products.
pub fn subspace_hessian<T: Scalar>(basis: &KrylovBasis<T>) -> DenseSymmetric<T> {
    let k = basis.len();
    DenseSymmetric::from_fn(k, |i, j| vector::dot(&basis.vectors[i], &basis.products[j]))
        .expect("finite Krylov products")
}
