use serde::Serialize;

use super::finder::CriticalPointRecord;
use crate::Scalar;

/// `τ₀ = 1e-6 · max(1, max|λ|)`: eigenvalues with `|λ| ≤ τ₀` count as zero.
pub fn zero_threshold<T: Scalar>(eigenvalues: &[T]) -> T {
    let m = eigenvalues.iter().fold(T::zero(), |m, &l| m.max(l.abs()));
    T::lit(1e-6) * T::one().max(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexSummary<T> {
    /// Fraction of negative eigenvalues among the non-zero ones; zero when
    /// every eigenvalue is zero.
    pub alpha: T,
    pub negative: usize,
    pub positive: usize,
    pub zero_count: usize,
}

pub fn index_of<T: Scalar>(eigenvalues: &[T]) -> IndexSummary<T> {
    let tau = zero_threshold(eigenvalues);
    let negative = eigenvalues.iter().filter(|&&l| l < -tau).count();
    let positive = eigenvalues.iter().filter(|&&l| l > tau).count();
    let zero_count = eigenvalues.len() - negative - positive;
    let nonzero = negative + positive;
    let alpha = if nonzero == 0 {
        T::zero()
    } else {
        T::lit(negative as f64) / T::lit(nonzero as f64)
    };
    IndexSummary { alpha, negative, positive, zero_count }
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite values"));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties. Returns `None`
/// when either input is constant or shorter than two.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "paired samples");
    if x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Error–index statistics over a set of critical points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub count: usize,
    /// Spearman correlation between error and index.
    pub spearman_error_index: Option<f64>,
    /// Mean Hessian eigenvalue over the lowest-error quarter of the points.
    pub low_error_mean_eigenvalue: Option<f64>,
    /// The same over the highest-error quarter.
    pub high_error_mean_eigenvalue: Option<f64>,
}

/// Summarizes `records`; callers pass only the converged ones. Quartile
/// means need at least four records.
pub fn summarize<T: Scalar>(records: &[&CriticalPointRecord<T>]) -> EnsembleSummary {
    let errors: Vec<f64> = records.iter().map(|r| r.error.as_f64()).collect();
    let indices: Vec<f64> = records.iter().map(|r| r.index.as_f64()).collect();
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| errors[a].total_cmp(&errors[b]));
    let q = records.len() / 4;
    let mean_eig = |ids: &[usize]| {
        let (sum, n) = ids.iter().fold((0.0, 0usize), |(s, n), &i| {
            let eigs = records[i].eigenvalues();
            (s + eigs.iter().map(|l| l.as_f64()).sum::<f64>(), n + eigs.len())
        });
        (n > 0).then(|| sum / n as f64)
    };
    EnsembleSummary {
        count: records.len(),
        spearman_error_index: spearman(&errors, &indices),
        low_error_mean_eigenvalue: if q > 0 { mean_eig(&order[..q]) } else { None },
        high_error_mean_eigenvalue: if q > 0 { mean_eig(&order[records.len() - q..]) } else { None },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_counts() {
        let s = index_of(&[10.0f64, 1e-9, -2.0, -3.0]);
        assert_eq!((s.negative, s.positive, s.zero_count), (2, 1, 1));
        assert!((s.alpha - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(index_of(&[1.0, 2.0]).alpha, 0.0);
        assert_eq!(index_of(&[-1.0, -2.0]).alpha, 1.0);
        let z = index_of(&[0.0, 0.0]);
        assert_eq!((z.alpha, z.zero_count), (0.0, 2));
    }

    #[test]
    fn spearman_values() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 35.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
        // ties get average ranks: x ranks (1, 2.5, 2.5, 4)
        let r = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let want = 4.5 / (4.5f64 * 5.0).sqrt();
        assert!((r - want).abs() < 1e-12);
    }
}
