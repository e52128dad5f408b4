use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::DataError;
use crate::Scalar;

/// Standard deviation of each synthetic cluster around its mean.
pub const BLOB_STD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub enum Targets<T> {
    Labels { labels: Vec<usize>, classes: usize },
    Vectors(Vec<Vec<T>>),
}

impl<T> Targets<T> {
    pub fn len(&self) -> usize {
        match self {
            Self::Labels { labels, .. } => labels.len(),
            Self::Vectors(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub name: String,
    pub seed: Option<u64>,
    inputs: Vec<Vec<T>>,
    targets: Targets<T>,
    image_shape: Option<(usize, usize)>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(
        name: impl Into<String>,
        inputs: Vec<Vec<T>>,
        targets: Targets<T>,
    ) -> Result<Self, DataError> {
        if inputs.len() != targets.len() {
            return Err(DataError::LengthMismatch { inputs: inputs.len(), targets: targets.len() });
        }
        if inputs.is_empty() {
            return Err(DataError::Empty);
        }
        let dim = inputs[0].len();
        for (index, x) in inputs.iter().enumerate() {
            if x.len() != dim {
                return Err(DataError::InconsistentDims { index, expected: dim, found: x.len() });
            }
            if !x.iter().all(|v| v.is_finite()) {
                return Err(DataError::NonFinite(index));
            }
        }
        match &targets {
            Targets::Labels { labels, classes } => {
                if let Some(&label) = labels.iter().find(|&&l| l >= *classes) {
                    return Err(DataError::LabelOutOfRange { label, classes: *classes });
                }
            }
            Targets::Vectors(v) => {
                let out = v[0].len();
                for (index, t) in v.iter().enumerate() {
                    if t.len() != out {
                        return Err(DataError::InconsistentDims {
                            index,
                            expected: out,
                            found: t.len(),
                        });
                    }
                    if !t.iter().all(|x| x.is_finite()) {
                        return Err(DataError::NonFinite(index));
                    }
                }
            }
        }
        Ok(Self { name: name.into(), seed: None, inputs, targets, image_shape: None })
    }

    pub fn with_image_shape(mut self, rows: usize, cols: usize) -> Result<Self, DataError> {
        if rows * cols != self.input_dim() {
            return Err(DataError::InvalidShape(format!(
                "{rows}x{cols} does not match {} features",
                self.input_dim()
            )));
        }
        self.image_shape = Some((rows, cols));
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn output_dim(&self) -> usize {
        match &self.targets {
            Targets::Labels { classes, .. } => *classes,
            Targets::Vectors(v) => v[0].len(),
        }
    }

    pub fn inputs(&self) -> &[Vec<T>] {
        &self.inputs
    }

    pub fn targets(&self) -> &Targets<T> {
        &self.targets
    }

    pub fn image_shape(&self) -> Option<(usize, usize)> {
        self.image_shape
    }

    /// Keeps the first `n` samples.
    pub fn truncate(&mut self, n: usize) {
        self.inputs.truncate(n.max(1));
        match &mut self.targets {
            Targets::Labels { labels, .. } => labels.truncate(n.max(1)),
            Targets::Vectors(v) => v.truncate(n.max(1)),
        }
    }
}

/// Gaussian class clusters. Sample `i` belongs to class `i % classes`; the
/// mean of class `c` is `±(separation/√2)·e_{c mod dim}` (sign flips every
/// `dim` classes), so with `classes ≤ dim` any two means are `separation`
/// apart. Cluster noise is isotropic with standard deviation [`BLOB_STD`].
pub fn synth_blobs<T: Scalar>(
    classes: usize,
    per_class: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset<T>, DataError> {
    if classes == 0 || per_class == 0 || dim == 0 {
        return Err(DataError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = separation / std::f64::consts::SQRT_2;
    let total = classes * per_class;
    let mut inputs = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for i in 0..total {
        let c = i % classes;
        let axis = c % dim;
        let sign = if (c / dim) % 2 == 0 { 1.0 } else { -1.0 };
        let x: Vec<T> = (0..dim)
            .map(|d| {
                let z: f64 = StandardNormal.sample(&mut rng);
                let mean = if d == axis { sign * radius } else { 0.0 };
                T::lit(mean + BLOB_STD * z)
            })
            .collect();
        inputs.push(x);
        labels.push(c);
    }
    let mut data = Dataset::new("blobs", inputs, Targets::Labels { labels, classes })?;
    data.seed = Some(seed);
    Ok(data)
}

/// Area-weighted resampling of image inputs to `rows × cols`.
///
/// Each output pixel is the mean of the input pixels it covers, weighting
/// partially covered pixels by their overlap.
pub fn downsample<T: Scalar>(
    data: &Dataset<T>,
    rows: usize,
    cols: usize,
) -> Result<Dataset<T>, DataError> {
    let (in_rows, in_cols) = data.image_shape.ok_or(DataError::NotAnImage)?;
    if rows == 0 || cols == 0 {
        return Err(DataError::InvalidShape(format!("{rows}x{cols}")));
    }
    let wr = overlap_weights::<T>(in_rows, rows);
    let wc = overlap_weights::<T>(in_cols, cols);
    let inputs = data
        .inputs
        .iter()
        .map(|img| {
            let mut out = vec![T::zero(); rows * cols];
            for (r, row_w) in wr.iter().enumerate() {
                for (c, col_w) in wc.iter().enumerate() {
                    let mut acc = T::zero();
                    for &(i, a) in row_w {
                        for &(j, b) in col_w {
                            acc += a * b * img[i * in_cols + j];
                        }
                    }
                    out[r * cols + c] = acc;
                }
            }
            out
        })
        .collect();
    let mut resized = Dataset::new(data.name.clone(), inputs, data.targets.clone())?
        .with_image_shape(rows, cols)?;
    resized.seed = data.seed;
    Ok(resized)
}

/// For each output cell, the input cells it overlaps with their normalized
/// overlap fractions (each cell's weights sum to one).
fn overlap_weights<T: Scalar>(input: usize, output: usize) -> Vec<Vec<(usize, T)>> {
    let ratio = input as f64 / output as f64;
    (0..output)
        .map(|o| {
            let lo = o as f64 * ratio;
            let hi = (o + 1) as f64 * ratio;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(input);
            (first..last)
                .filter_map(|i| {
                    let overlap = (hi.min((i + 1) as f64) - lo.max(i as f64)).max(0.0);
                    (overlap > 0.0).then(|| (i, T::lit(overlap / ratio)))
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image_set(images: Vec<Vec<f64>>, rows: usize, cols: usize) -> Dataset<f64> {
        let n = images.len();
        Dataset::new("img", images, Targets::Labels { labels: vec![0; n], classes: 1 })
            .unwrap()
            .with_image_shape(rows, cols)
            .unwrap()
    }

    #[test]
    fn constant_image_stays_constant() {
        let d = downsample(&image_set(vec![vec![0.5; 28 * 28]], 28, 28), 10, 10).unwrap();
        assert!(d.inputs()[0].iter().all(|&p| (p - 0.5).abs() < 1e-12));
        assert_eq!(d.image_shape(), Some((10, 10)));
    }

    #[test]
    fn two_by_two_to_one() {
        let d = downsample(&image_set(vec![vec![0.0, 1.0, 1.0, 0.0]], 2, 2), 1, 1).unwrap();
        assert_eq!(d.inputs()[0], vec![0.5]);
    }

    #[test]
    fn checkerboard_averages_out() {
        let board: Vec<f64> = (0..28 * 28).map(|k| ((k / 28 + k % 28) % 2) as f64).collect();
        let d = downsample(&image_set(vec![board], 28, 28), 10, 10).unwrap();
        assert!(d.inputs()[0].iter().all(|&p| (0.45..=0.55).contains(&p)), "{:?}", d.inputs()[0]);
    }

    #[test]
    fn non_image_rejected() {
        let d = synth_blobs::<f64>(2, 2, 3, 1.0, 0).unwrap();
        assert!(matches!(downsample(&d, 1, 1), Err(DataError::NotAnImage)));
    }

    #[test]
    fn blobs_are_reproducible() {
        let a = synth_blobs::<f64>(3, 5, 4, 2.0, 42).unwrap();
        let b = synth_blobs::<f64>(3, 5, 4, 2.0, 42).unwrap();
        assert_eq!(a, b);
        let c = synth_blobs::<f64>(3, 5, 4, 2.0, 43).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.len(), 15);
    }

    #[test]
    fn zero_separation_means_coincide() {
        // Same seed with and without separation: points differ only by the
        // class mean, which is zero when separation is zero.
        let d0 = synth_blobs::<f64>(2, 50, 2, 0.0, 5).unwrap();
        let d4 = synth_blobs::<f64>(2, 50, 2, 4.0, 5).unwrap();
        let r = 4.0 / std::f64::consts::SQRT_2;
        for (i, (a, b)) in d0.inputs().iter().zip(d4.inputs()).enumerate() {
            let mean = if i % 2 == 0 { [r, 0.0] } else { [0.0, r] };
            assert!((b[0] - a[0] - mean[0]).abs() < 1e-12 && (b[1] - a[1] - mean[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn dataset_validation() {
        let bad = Dataset::<f64>::new(
            "x",
            vec![vec![1.0], vec![2.0]],
            Targets::Labels { labels: vec![0, 3], classes: 2 },
        );
        assert!(matches!(bad, Err(DataError::LabelOutOfRange { label: 3, classes: 2 })));
        let bad = Dataset::<f64>::new(
            "x",
            vec![vec![1.0]],
            Targets::Labels { labels: vec![0, 1], classes: 2 },
        );
        assert!(matches!(bad, Err(DataError::LengthMismatch { .. })));
        let bad = Dataset::new("x", vec![vec![f64::NAN]], Targets::Vectors(vec![vec![0.0]]));
        assert!(matches!(bad, Err(DataError::NonFinite(0))));
    }
}
