use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, Targets};
use crate::objectives::Objective;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Linear outputs, `½‖z − t‖²` per sample.
    Mse,
    /// Softmax outputs, negative log-likelihood of the label.
    CrossEntropy,
}

/// Architecture of a `input → tanh hidden → output` network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_units: usize,
    pub output_dim: usize,
    pub loss: Loss,
    /// Initial weights are uniform in `[-init_range, init_range]`.
    pub init_range: f64,
    pub seed: u64,
}

impl MlpSpec {
    pub fn param_count(&self) -> usize {
        (self.input_dim + 1) * self.hidden_units + (self.hidden_units + 1) * self.output_dim
    }

    pub fn init_params<T: Scalar>(&self) -> Vec<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let r = self.init_range;
        (0..self.param_count())
            .map(|_| T::lit(if r > 0.0 { rng.random_range(-r..=r) } else { 0.0 }))
            .collect()
    }

    /// Offsets of `(W1, b1, W2, b2)` in the flat parameter vector.
    fn offsets(&self) -> [usize; 4] {
        let w1 = 0;
        let b1 = self.hidden_units * self.input_dim;
        let w2 = b1 + self.hidden_units;
        let b2 = w2 + self.output_dim * self.hidden_units;
        [w1, b1, w2, b2]
    }

    /// Swaps hidden units `a` and `b` in a parameter vector.
    pub fn swap_hidden_units<T: Copy>(&self, theta: &[T], a: usize, b: usize) -> Vec<T> {
        let [w1, b1, w2, _] = self.offsets();
        let (n_in, n_hid) = (self.input_dim, self.hidden_units);
        let mut out = theta.to_vec();
        for i in 0..n_in {
            out.swap(w1 + a * n_in + i, w1 + b * n_in + i);
        }
        out.swap(b1 + a, b1 + b);
        for o in 0..self.output_dim {
            out.swap(w2 + o * n_hid + a, w2 + o * n_hid + b);
        }
        out
    }
}

/// Mean loss of an [`MlpSpec`] network over a dataset.
#[derive(Debug, Clone)]
pub struct MlpObjective<T> {
    spec: MlpSpec,
    data: Dataset<T>,
    /// One-hot (mse over labels) or regression targets, per sample.
    dense_targets: Option<Vec<Vec<T>>>,
}

pub fn make_mlp<T: Scalar>(spec: MlpSpec, data: Dataset<T>) -> Result<MlpObjective<T>, DataError> {
    if spec.input_dim == 0 || spec.hidden_units == 0 || spec.output_dim == 0 {
        return Err(DataError::SpecMismatch("layer sizes must be positive".into()));
    }
    if spec.input_dim != data.input_dim() {
        return Err(DataError::SpecMismatch(format!(
            "input_dim {} but dataset has {} features",
            spec.input_dim,
            data.input_dim()
        )));
    }
    if spec.output_dim != data.output_dim() {
        return Err(DataError::SpecMismatch(format!(
            "output_dim {} but dataset has {} outputs",
            spec.output_dim,
            data.output_dim()
        )));
    }
    let dense_targets = match (spec.loss, data.targets()) {
        (Loss::CrossEntropy, Targets::Vectors(_)) => {
            return Err(DataError::SpecMismatch("cross_entropy needs class labels".into()))
        }
        (Loss::CrossEntropy, Targets::Labels { .. }) => None,
        (Loss::Mse, Targets::Vectors(v)) => Some(v.clone()),
        (Loss::Mse, Targets::Labels { labels, classes }) => Some(
            labels
                .iter()
                .map(|&l| (0..*classes).map(|c| if c == l { T::one() } else { T::zero() }).collect())
                .collect(),
        ),
    };
    Ok(MlpObjective { spec, data, dense_targets })
}

struct Layers<'a, T> {
    w1: &'a [T],
    b1: &'a [T],
    w2: &'a [T],
    b2: &'a [T],
}

/// Per-sample scratch buffers.
struct Scratch<T> {
    h: Vec<T>,
    z: Vec<T>,
    dz: Vec<T>,
    dh: Vec<T>,
}

impl<T: Scalar> MlpObjective<T> {
    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn data(&self) -> &Dataset<T> {
        &self.data
    }

    fn layers<'a>(&self, theta: &'a [T]) -> Layers<'a, T> {
        assert_eq!(theta.len(), self.spec.param_count(), "parameter count");
        let [w1, b1, w2, b2] = self.spec.offsets();
        Layers {
            w1: &theta[w1..b1],
            b1: &theta[b1..w2],
            w2: &theta[w2..b2],
            b2: &theta[b2..],
        }
    }

    fn scratch(&self) -> Scratch<T> {
        let h = vec![T::zero(); self.spec.hidden_units];
        let z = vec![T::zero(); self.spec.output_dim];
        Scratch { dh: h.clone(), dz: z.clone(), h, z }
    }

    fn forward(&self, p: &Layers<T>, x: &[T], s: &mut Scratch<T>) {
        let n_in = self.spec.input_dim;
        for (j, hj) in s.h.iter_mut().enumerate() {
            let row = &p.w1[j * n_in..(j + 1) * n_in];
            let a: T = row.iter().zip(x).map(|(&w, &xi)| w * xi).sum::<T>() + p.b1[j];
            *hj = a.tanh();
        }
        let n_hid = self.spec.hidden_units;
        for (o, zo) in s.z.iter_mut().enumerate() {
            let row = &p.w2[o * n_hid..(o + 1) * n_hid];
            *zo = row.iter().zip(&s.h).map(|(&w, &hj)| w * hj).sum::<T>() + p.b2[o];
        }
    }

    /// Loss of one sample; fills `s.dz` with `∂loss/∂z`.
    fn output_loss(&self, sample: usize, s: &mut Scratch<T>) -> T {
        match &self.dense_targets {
            Some(targets) => {
                let t = &targets[sample];
                let mut loss = T::zero();
                for o in 0..s.z.len() {
                    let r = s.z[o] - t[o];
                    s.dz[o] = r;
                    loss += r * r;
                }
                loss * T::lit(0.5)
            }
            None => {
                let Targets::Labels { labels, .. } = self.data.targets() else {
                    unreachable!("cross entropy validated against labels")
                };
                let label = labels[sample];
                let m = s.z.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
                let lse = m + s.z.iter().map(|&v| (v - m).exp()).sum::<T>().ln();
                for o in 0..s.z.len() {
                    s.dz[o] = (s.z[o] - lse).exp();
                }
                s.dz[label] -= T::one();
                lse - s.z[label]
            }
        }
    }

    /// Backpropagates `s.dz` into `g` (accumulating).
    fn backward(&self, p: &Layers<T>, x: &[T], s: &mut Scratch<T>, g: &mut [T]) {
        let [w1, b1, w2, b2] = self.spec.offsets();
        let (n_in, n_hid) = (self.spec.input_dim, self.spec.hidden_units);
        s.dh.iter_mut().for_each(|v| *v = T::zero());
        for (o, &d) in s.dz.iter().enumerate() {
            g[b2 + o] += d;
            for j in 0..n_hid {
                g[w2 + o * n_hid + j] += d * s.h[j];
                s.dh[j] += p.w2[o * n_hid + j] * d;
            }
        }
        for j in 0..n_hid {
            let da = s.dh[j] * (T::one() - s.h[j] * s.h[j]);
            g[b1 + j] += da;
            let row = &mut g[w1 + j * n_in..w1 + (j + 1) * n_in];
            for (gi, &xi) in row.iter_mut().zip(x) {
                *gi += da * xi;
            }
        }
    }

    fn mean_grad(&self, theta: &[T], samples: impl ExactSizeIterator<Item = usize>) -> Vec<T> {
        let p = self.layers(theta);
        let mut s = self.scratch();
        let mut g = vec![T::zero(); theta.len()];
        let count = samples.len();
        for k in samples {
            let x = &self.data.inputs()[k];
            self.forward(&p, x, &mut s);
            self.output_loss(k, &mut s);
            self.backward(&p, x, &mut s, &mut g);
        }
        let inv = T::one() / T::lit(count.max(1) as f64);
        g.iter_mut().for_each(|v| *v *= inv);
        g
    }
}

impl<T: Scalar> Objective<T> for MlpObjective<T> {
    fn dim(&self) -> usize {
        self.spec.param_count()
    }

    fn eval(&self, theta: &[T]) -> T {
        let p = self.layers(theta);
        let mut s = self.scratch();
        let mut total = T::zero();
        for (k, x) in self.data.inputs().iter().enumerate() {
            self.forward(&p, x, &mut s);
            total += self.output_loss(k, &mut s);
        }
        total / T::lit(self.data.len() as f64)
    }

    fn grad(&self, theta: &[T]) -> Vec<T> {
        self.mean_grad(theta, 0..self.data.len())
    }

    fn sample_count(&self) -> usize {
        self.data.len()
    }

    fn grad_batch(&self, theta: &[T], batch: &[usize]) -> Vec<T> {
        self.mean_grad(theta, batch.iter().copied())
    }

    /// Forward-over-reverse (R-operator) Hessian-vector product.
    fn hvp(&self, theta: &[T], v: &[T]) -> Vec<T> {
        let p = self.layers(theta);
        let dv = self.layers(v);
        let [w1, b1, w2, b2] = self.spec.offsets();
        let (n_in, n_hid, n_out) =
            (self.spec.input_dim, self.spec.hidden_units, self.spec.output_dim);
        let mut s = self.scratch();
        let mut out = vec![T::zero(); theta.len()];
        let mut rh = vec![T::zero(); n_hid];
        let mut rz = vec![T::zero(); n_out];
        let mut rdz = vec![T::zero(); n_out];
        let two = T::lit(2.0);

        for (k, x) in self.data.inputs().iter().enumerate() {
            self.forward(&p, x, &mut s);
            self.output_loss(k, &mut s);

            for j in 0..n_hid {
                let row = &dv.w1[j * n_in..(j + 1) * n_in];
                let ra = row.iter().zip(x).map(|(&w, &xi)| w * xi).sum::<T>() + dv.b1[j];
                rh[j] = (T::one() - s.h[j] * s.h[j]) * ra;
            }
            for o in 0..n_out {
                let mut acc = dv.b2[o];
                for j in 0..n_hid {
                    acc += p.w2[o * n_hid + j] * rh[j] + dv.w2[o * n_hid + j] * s.h[j];
                }
                rz[o] = acc;
            }
            match self.spec.loss {
                Loss::Mse => rdz.copy_from_slice(&rz),
                Loss::CrossEntropy => {
                    // softmax probabilities are dz plus the one-hot label
                    let Targets::Labels { labels, .. } = self.data.targets() else {
                        unreachable!()
                    };
                    let mut prob = s.dz.clone();
                    prob[labels[k]] += T::one();
                    let mean: T = prob.iter().zip(&rz).map(|(&a, &b)| a * b).sum();
                    for o in 0..n_out {
                        rdz[o] = prob[o] * (rz[o] - mean);
                    }
                }
            }

            for o in 0..n_out {
                out[b2 + o] += rdz[o];
                for j in 0..n_hid {
                    out[w2 + o * n_hid + j] += rdz[o] * s.h[j] + s.dz[o] * rh[j];
                }
            }
            for j in 0..n_hid {
                let mut dh = T::zero();
                let mut rdh = T::zero();
                for o in 0..n_out {
                    dh += p.w2[o * n_hid + j] * s.dz[o];
                    rdh += dv.w2[o * n_hid + j] * s.dz[o] + p.w2[o * n_hid + j] * rdz[o];
                }
                let slope = T::one() - s.h[j] * s.h[j];
                let rda = rdh * slope - two * s.h[j] * rh[j] * dh;
                out[b1 + j] += rda;
                let row = &mut out[w1 + j * n_in..w1 + (j + 1) * n_in];
                for (r, &xi) in row.iter_mut().zip(x) {
                    *r += rda * xi;
                }
            }
        }
        let inv = T::one() / T::lit(self.data.len() as f64);
        out.iter_mut().for_each(|v| *v *= inv);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::synth_blobs;
    use crate::numerics::vector;
    use crate::objectives::{check_gradient, check_hvp};

    fn spec(i: usize, h: usize, o: usize, loss: Loss) -> MlpSpec {
        MlpSpec { input_dim: i, hidden_units: h, output_dim: o, loss, init_range: 1.0, seed: 3 }
    }

    #[test]
    fn parameter_count() {
        assert_eq!(spec(2, 8, 2, Loss::Mse).param_count(), 42);
        assert_eq!(spec(100, 50, 10, Loss::Mse).param_count(), 101 * 50 + 51 * 10);
    }

    #[test]
    fn zero_weights_zero_targets() {
        let data = Dataset::new(
            "zeros",
            vec![vec![0.3, -1.0], vec![2.0, 0.5]],
            Targets::Vectors(vec![vec![0.0, 0.0]; 2]),
        )
        .unwrap();
        let mut s = spec(2, 3, 2, Loss::Mse);
        s.init_range = 0.0;
        let net = make_mlp(s.clone(), data).unwrap();
        let theta: Vec<f64> = s.init_params();
        assert!(theta.iter().all(|&t| t == 0.0));
        assert_eq!(net.eval(&theta), 0.0);
        assert!(net.grad(&theta).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let data = synth_blobs::<f64>(2, 3, 4, 1.0, 0).unwrap();
        assert!(make_mlp(spec(3, 2, 2, Loss::Mse), data.clone()).is_err());
        assert!(make_mlp(spec(4, 2, 3, Loss::Mse), data.clone()).is_err());
        let reg = Dataset::new("r", vec![vec![1.0]], Targets::Vectors(vec![vec![1.0]])).unwrap();
        assert!(make_mlp(spec(1, 2, 1, Loss::CrossEntropy), reg).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for loss in [Loss::Mse, Loss::CrossEntropy] {
            let data = synth_blobs::<f64>(3, 4, 3, 2.0, 8).unwrap();
            let s = spec(3, 5, 3, loss);
            let net = make_mlp(s.clone(), data).unwrap();
            let theta: Vec<f64> = s.init_params();
            let g = check_gradient(&net, &theta, 1e-5);
            assert!(g.passes(1e-6), "{loss:?} grad {g:?}");
            let v: Vec<f64> = (0..theta.len()).map(|k| ((k * 37 % 11) as f64 - 5.0) / 5.0).collect();
            let h = check_hvp(&net, &theta, &v, 1e-5);
            assert!(h.passes(1e-6), "{loss:?} hvp {h:?}");
        }
    }

    #[test]
    fn minibatch_gradient_of_all_samples_is_full_gradient() {
        let data = synth_blobs::<f64>(2, 5, 2, 3.0, 1).unwrap();
        let s = spec(2, 4, 2, Loss::CrossEntropy);
        let net = make_mlp(s.clone(), data).unwrap();
        let theta: Vec<f64> = s.init_params();
        let all: Vec<usize> = (0..10).collect();
        assert_eq!(net.grad_batch(&theta, &all), net.grad(&theta));
        assert_ne!(net.grad_batch(&theta, &[0, 1]), net.grad(&theta));
    }

    #[test]
    fn hidden_permutation_symmetry() {
        let data = synth_blobs::<f64>(2, 4, 2, 4.0, 2).unwrap();
        let s = spec(2, 8, 2, Loss::Mse);
        let net = make_mlp(s.clone(), data).unwrap();
        let theta: Vec<f64> = s.init_params();
        let swapped = s.swap_hidden_units(&theta, 1, 6);
        assert_ne!(swapped, theta);
        assert!((net.eval(&theta) - net.eval(&swapped)).abs() < 1e-12);
        let back = s.swap_hidden_units(&swapped, 1, 6);
        assert_eq!(back, theta);
        assert!(vector::norm(&vector::sub(&net.grad(&theta), &net.grad(&theta))) == 0.0);
    }

    #[test]
    fn single_precision_network() {
        let data = synth_blobs::<f32>(2, 4, 2, 4.0, 2).unwrap();
        let s = spec(2, 3, 2, Loss::CrossEntropy);
        let net = make_mlp(s.clone(), data).unwrap();
        let theta: Vec<f32> = s.init_params();
        assert!(net.eval(&theta).is_finite());
        assert!(check_gradient(&net, &theta, 1e-2).passes(1e-2));
    }
}
