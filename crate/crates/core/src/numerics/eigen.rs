use super::{vector, DenseSymmetric, LinalgError};
use crate::Scalar;

/// Orders up to this size use cyclic Jacobi; larger ones go through
/// Householder tridiagonalization followed by implicit QL.
const JACOBI_MAX_ORDER: usize = 64;
const JACOBI_MAX_SWEEPS: usize = 100;
const QL_MAX_ITERS: usize = 60;

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition<T> {
    values: Vec<T>,
    /// `vectors[i]` is the unit eigenvector for `values[i]`.
    vectors: Vec<Vec<T>>,
}

/// Admissibility rule for the eigenvalues of a shifted system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    /// Every shifted eigenvalue must exceed the floor.
    PositiveDefinite,
    /// Every shifted eigenvalue must exceed the floor in magnitude.
    Nonsingular,
}

impl<T: Scalar> EigenDecomposition<T> {
    pub fn order(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn vectors(&self) -> &[Vec<T>] {
        &self.vectors
    }

    pub fn min_value(&self) -> T {
        *self.values.last().expect("non-empty decomposition")
    }

    pub fn max_value(&self) -> T {
        self.values[0]
    }

    pub fn max_abs_value(&self) -> T {
        vector::max_abs(&self.values)
    }

    /// Solve floor `1e-12 · max(1, max|λ|)`.
    pub fn solve_floor(&self) -> T {
        T::tol(1e-12) * T::one().max(self.max_abs_value())
    }

    /// Components `e⁽ⁱ⁾·x` of `x` in the eigenbasis.
    pub fn coordinates(&self, x: &[T]) -> Vec<T> {
        self.vectors.iter().map(|e| vector::dot(e, x)).collect()
    }

    /// `Σ cᵢ e⁽ⁱ⁾`
    pub fn from_coordinates(&self, coords: &[T]) -> Vec<T> {
        let n = self.order();
        let mut out = vec![T::zero(); n];
        for (c, e) in coords.iter().zip(&self.vectors) {
            vector::axpy(*c, e, &mut out);
        }
        out
    }

    /// `V diag(f(λ)) Vᵀ`
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> DenseSymmetric<T> {
        let n = self.order();
        let mut data = vec![T::zero(); n * n];
        for (lam, e) in self.values.iter().zip(&self.vectors) {
            let w = f(*lam);
            for i in 0..n {
                let wi = w * e[i];
                for j in 0..n {
                    data[i * n + j] += wi * e[j];
                }
            }
        }
        DenseSymmetric::new(n, data).expect("reconstruction of finite decomposition")
    }

    pub fn abs_matrix(&self) -> DenseSymmetric<T> {
        self.reconstruct_with(|l| l.abs())
    }

    /// Decomposition of `|A|` sharing the eigenvectors of `A`.
    pub fn abs_values(&self) -> Self {
        let mut pairs: Vec<(T, Vec<T>)> = self
            .values
            .iter()
            .map(|l| l.abs())
            .zip(self.vectors.iter().cloned())
            .collect();
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite eigenvalues"));
        let (values, vectors) = pairs.into_iter().unzip();
        Self { values, vectors }
    }

    /// Solves `(A + shift·I) x = g` by spectral inversion.
    pub fn solve_shifted(&self, shift: T, g: &[T], mode: SolveMode) -> Result<Vec<T>, LinalgError> {
        if g.len() != self.order() {
            return Err(LinalgError::DimensionMismatch { expected: self.order(), found: g.len() });
        }
        let floor = self.solve_floor();
        let mut coords = self.coordinates(g);
        for (c, &lam) in coords.iter_mut().zip(&self.values) {
            let shifted = lam + shift;
            let ok = match mode {
                SolveMode::PositiveDefinite => shifted > floor,
                SolveMode::Nonsingular => shifted.abs() > floor,
            };
            if !ok {
                return Err(LinalgError::SingularSystem {
                    eigenvalue: shifted.as_f64(),
                    floor: floor.as_f64(),
                });
            }
            *c /= shifted;
        }
        Ok(self.from_coordinates(&coords))
    }

    /// `‖A·V − V·diag(λ)‖_F`
    pub fn residual(&self, a: &DenseSymmetric<T>) -> T {
        let mut acc = T::zero();
        for (lam, e) in self.values.iter().zip(&self.vectors) {
            let ae = a.mul_vec(e);
            acc += ae.iter().zip(e).map(|(&x, &y)| (x - *lam * y).powi(2)).sum::<T>();
        }
        acc.sqrt()
    }

    /// `‖VᵀV − I‖_F`
    pub fn orthogonality_defect(&self) -> T {
        let mut acc = T::zero();
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate() {
                let target = if i == j { T::one() } else { T::zero() };
                acc += (vector::dot(a, b) - target).powi(2);
            }
        }
        acc.sqrt()
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
///
/// Each eigenvector is sign-normalized so its largest-magnitude component is
/// positive.
pub fn sym_eig<T: Scalar>(a: &DenseSymmetric<T>) -> Result<EigenDecomposition<T>, LinalgError> {
    let (values, vectors) = if a.order() <= JACOBI_MAX_ORDER {
        jacobi(a, true)?
    } else {
        tridiagonal_ql(a, true)?
    };
    let vectors = vectors.expect("vectors requested");
    let n = a.order();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).expect("finite eigenvalues"));
    let mut sorted_values = Vec::with_capacity(n);
    let mut sorted_vectors = Vec::with_capacity(n);
    for idx in order {
        sorted_values.push(values[idx]);
        // column idx of the row-major eigenvector matrix
        let mut e: Vec<T> = (0..n).map(|k| vectors[k * n + idx]).collect();
        let pivot = e.iter().fold(T::zero(), |m, &x| if x.abs() > m.abs() { x } else { m });
        if pivot < T::zero() {
            e.iter_mut().for_each(|x| *x = -*x);
        }
        sorted_vectors.push(e);
    }
    Ok(EigenDecomposition { values: sorted_values, vectors: sorted_vectors })
}

/// Eigenvalues only, descending.
pub fn sym_eigvals<T: Scalar>(a: &DenseSymmetric<T>) -> Result<Vec<T>, LinalgError> {
    let (mut values, _) = if a.order() <= JACOBI_MAX_ORDER {
        jacobi(a, false)?
    } else {
        tridiagonal_ql(a, false)?
    };
    values.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
    Ok(values)
}

type RawEigen<T> = (Vec<T>, Option<Vec<T>>);

fn jacobi<T: Scalar>(a: &DenseSymmetric<T>, want_vectors: bool) -> Result<RawEigen<T>, LinalgError> {
    let n = a.order();
    let mut m = a.as_slice().to_vec();
    let mut v = if want_vectors {
        let mut id = vec![T::zero(); n * n];
        (0..n).for_each(|i| id[i * n + i] = T::one());
        Some(id)
    } else {
        None
    };
    let frob = m.iter().map(|x| x.powi(2)).sum::<T>().sqrt();
    let tol = T::epsilon() * frob;
    let two = T::lit(2.0);

    let off_norm = |m: &[T]| {
        let mut s = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                s += m[p * n + q].powi(2);
            }
        }
        (two * s).sqrt()
    };

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&m) <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (two * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(T::one()));
                let c = T::one() / t.hypot(T::one());
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = T::zero();
                m[q * n + p] = T::zero();
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    if !converged {
        let residual = off_norm(&m);
        if residual > tol {
            return Err(LinalgError::NoConvergence { residual: residual.as_f64() });
        }
    }
    Ok(((0..n).map(|i| m[i * n + i]).collect(), v))
}

/// Householder reduction to tridiagonal form and implicit QL iteration,
/// after the EISPACK `tred2`/`tql2` pair. Eigenvectors are the columns of the
/// returned row-major matrix.
fn tridiagonal_ql<T: Scalar>(
    a: &DenseSymmetric<T>,
    want_vectors: bool,
) -> Result<RawEigen<T>, LinalgError> {
    let n = a.order();
    let mut v: Vec<Vec<T>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    let zero = T::zero();

    // tred2
    for j in 0..n {
        d[j] = v[n - 1][j];
    }
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = zero;
                v[j][i] = zero;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let upd = f * e[k] + g * d[k];
                    v[k][j] -= upd;
                }
                d[j] = v[i - 1][j];
                v[i][j] = zero;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[n - 1][i] = v[i][i];
        v[i][i] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    let upd = g * d[k];
                    v[k][j] -= upd;
                }
            }
        }
        for k in 0..=i {
            v[k][i + 1] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = zero;
    }
    v[n - 1][n - 1] = T::one();
    e[0] = zero;

    // tql2
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;
    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    let two = T::lit(2.0);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITERS {
                    return Err(LinalgError::NoConvergence { residual: e[l].abs().as_f64() });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if want_vectors {
                        for row in v.iter_mut() {
                            let hk = row[i + 1];
                            row[i + 1] = s * row[i] + c * hk;
                            row[i] = c * row[i] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }

    let vectors = want_vectors.then(|| v.into_iter().flatten().collect());
    Ok((d, vectors))
}
