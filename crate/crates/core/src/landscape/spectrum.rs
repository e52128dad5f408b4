use serde::Serialize;

use super::stats::zero_threshold;
use crate::Scalar;

/// Histogram of a Hessian spectrum over its own range `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumHistogram {
    /// `bins + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Eigenvalues with `|λ| ≤ τ₀`; they are still binned.
    pub zero_mode_count: usize,
    /// Loss at the critical point the spectrum belongs to.
    pub epsilon: f64,
}

/// Bins `eigenvalues` into `bins` equal-width buckets.
///
/// The last bucket is closed on the right. A degenerate range is widened
/// by ±½ so every value still lands in a bucket.
///
/// # Panics
/// If `bins == 0` or `eigenvalues` is empty.
pub fn spectrum_histogram<T: Scalar>(eigenvalues: &[T], epsilon: T, bins: usize) -> SpectrumHistogram {
    assert!(bins > 0, "histogram needs at least one bin");
    assert!(!eigenvalues.is_empty(), "histogram of an empty spectrum");
    let values: Vec<f64> = eigenvalues.iter().map(|v| v.as_f64()).collect();
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 0.0 {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0; bins];
    for v in &values {
        let idx = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let tau = zero_threshold(eigenvalues).as_f64();
    SpectrumHistogram {
        edges,
        counts,
        zero_mode_count: values.iter().filter(|v| v.abs() <= tau).count(),
        epsilon: epsilon.as_f64(),
    }
}
