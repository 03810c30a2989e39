//! Compact multi-label classifier over pooled spectral features.
//!
//! A dense stack (input -> hidden layers -> classes) with leaky-rectifier
//! activations and a per-class sigmoid head. Gradients are derived by hand
//! and verified against finite differences; everything is generic over the
//! scalar type so checks can run in f64 while training runs in f32.

mod checkpoint;
mod loss;
mod optim;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};
pub use loss::{masked_bce, LabelMatrix};
pub use optim::{AdamW, AdamWState, OptimizerConfig};
pub use train::{
    pool_dataset, predict, train, write_history_csv, EpochRecord, PlateauScheduler,
    PooledDataset, TrainError, TrainOutcome, TrainerConfig, PLATEAU_MIN_DELTA,
};

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::SpectralFeature;
use crate::rng::seeded_rng;
use crate::scalar::{real, Scalar};

/// Slope of the leaky rectifier used in all hidden layers.
pub const LEAKY_SLOPE: f64 = 0.01;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let n = rows.len();
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(n * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged rows");
            data.extend(row);
        }
        Self { rows: n, cols, data }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Layer shape chain of a network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub classes: usize,
}

impl ModelConfig {
    pub fn new(input_dim: usize, hidden: &[usize], classes: usize) -> Self {
        Self {
            input_dim,
            hidden: hidden.to_vec(),
            classes,
        }
    }

    /// Full dimension chain input -> hidden... -> classes.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden);
        dims.push(self.classes);
        dims
    }
}

/// One dense layer: `out = W x + b` with W stored row-major (out x in).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![T::zero(); in_dim * out_dim],
            bias: vec![T::zero(); out_dim],
        }
    }
}

/// Dense network with leaky-rectifier hidden layers and a sigmoid head.
///
/// The same structure doubles as the gradient container: `backward` returns
/// a `Network` holding dL/dparam in every slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    pub layers: Vec<Dense<T>>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("feature has zero frames")]
    EmptyFeature,
    #[error("input has {got} columns but the network expects {want}")]
    InputDim { got: usize, want: usize },
    #[error("labels are {got_rows}x{got_cols} but probabilities are {want_rows}x{want_cols}")]
    LabelShape {
        got_rows: usize,
        got_cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("corrupt checkpoint {path}: {detail}")]
    CorruptCheckpoint { path: String, detail: String },
    #[error("failed to access {path}: {detail}")]
    Io { path: String, detail: String },
}

/// Numerically safe sigmoid, clamped strictly inside (0, 1).
#[inline]
fn sigmoid<T: Scalar>(z: T) -> T {
    let p = if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    };
    p.max(T::min_positive_value()).min(T::one() - T::epsilon())
}

impl<T: Scalar> Network<T> {
    /// Seeded initialization: weights uniform in +/- sqrt(6/(fan_in+fan_out)),
    /// biases zero.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let dims = cfg.dims();
        let layers = dims
            .windows(2)
            .map(|pair| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = (0..fan_in * fan_out)
                    .map(|_| real::<T>(rng.random_range(-bound..bound)))
                    .collect();
                Dense {
                    in_dim: fan_in,
                    out_dim: fan_out,
                    weights,
                    bias: vec![T::zero(); fan_out],
                }
            })
            .collect();
        Self { layers }
    }

    /// Same shapes, all parameters zero (gradient container).
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    pub fn config(&self) -> ModelConfig {
        let input_dim = self.layers.first().map_or(0, |l| l.in_dim);
        let classes = self.layers.last().map_or(0, |l| l.out_dim);
        let hidden = self.layers[..self.layers.len().saturating_sub(1)]
            .iter()
            .map(|l| l.out_dim)
            .collect();
        ModelConfig {
            input_dim,
            hidden,
            classes,
        }
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// All parameters in a fixed order (per layer: weights then bias).
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Overwrite parameters from a flat slice in `flatten` order.
    pub fn unflatten_from(&mut self, flat: &[T]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter count");
        let mut i = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[i..i + nw]);
            i += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[i..i + nb]);
            i += nb;
        }
    }

    /// Visit every parameter in `flatten` order.
    pub fn for_each_param_mut(&mut self, mut f: impl FnMut(usize, &mut T)) {
        let mut i = 0;
        for l in &mut self.layers {
            for w in &mut l.weights {
                f(i, w);
                i += 1;
            }
            for b in &mut l.bias {
                f(i, b);
                i += 1;
            }
        }
    }

    /// Per-class probabilities in (0, 1) for a batch of feature rows.
    pub fn forward(&self, input: &Matrix<T>) -> Result<Matrix<T>, ModelError> {
        Ok(self.forward_cached(input)?.probs)
    }

    /// Forward pass keeping every layer input for backpropagation.
    pub fn forward_cached(&self, input: &Matrix<T>) -> Result<ForwardCache<T>, ModelError> {
        let want = self.layers.first().map_or(0, |l| l.in_dim);
        if input.cols != want {
            return Err(ModelError::InputDim {
                got: input.cols,
                want,
            });
        }
        let slope = real::<T>(LEAKY_SLOPE);
        let mut layer_inputs = Vec::with_capacity(self.layers.len());
        let mut current = input.clone();
        for (idx, layer) in self.layers.iter().enumerate() {
            let is_output = idx + 1 == self.layers.len();
            let mut next = Matrix::zeros(current.rows, layer.out_dim);
            for r in 0..current.rows {
                let row = current.row(r);
                for o in 0..layer.out_dim {
                    let w = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    let mut acc = layer.bias[o];
                    for (x, wi) in row.iter().zip(w) {
                        acc += *x * *wi;
                    }
                    *next.at_mut(r, o) = if is_output {
                        sigmoid(acc)
                    } else if acc >= T::zero() {
                        acc
                    } else {
                        acc * slope
                    };
                }
            }
            layer_inputs.push(current);
            current = next;
        }
        Ok(ForwardCache {
            layer_inputs,
            probs: current,
        })
    }

    /// Analytic gradients of masked BCE composed with the forward pass.
    ///
    /// Masked label entries contribute exactly zero to every parameter
    /// gradient; when every entry is masked all gradients are exactly zero.
    pub fn backward(
        &self,
        cache: &ForwardCache<T>,
        labels: &LabelMatrix<T>,
    ) -> Result<Network<T>, ModelError> {
        let probs = &cache.probs;
        if labels.rows != probs.rows || labels.cols != probs.cols {
            return Err(ModelError::LabelShape {
                got_rows: labels.rows,
                got_cols: labels.cols,
                want_rows: probs.rows,
                want_cols: probs.cols,
            });
        }
        let mut grads = self.zeros_like();
        let unmasked = labels.unmasked_count();
        if unmasked == 0 {
            return Ok(grads);
        }
        let norm = T::one() / T::from_usize(unmasked).unwrap();
        let slope = real::<T>(LEAKY_SLOPE);

        // dL/dz at the sigmoid head: (p - y)/|U| on unmasked entries.
        let mut delta = Matrix::zeros(probs.rows, probs.cols);
        for r in 0..probs.rows {
            for c in 0..probs.cols {
                if let Some(y) = labels.at(r, c) {
                    *delta.at_mut(r, c) = (probs.at(r, c) - y) * norm;
                }
            }
        }

        for idx in (0..self.layers.len()).rev() {
            let layer = &self.layers[idx];
            let input = &cache.layer_inputs[idx];
            let grad = &mut grads.layers[idx];
            for r in 0..delta.rows {
                let x = input.row(r);
                for o in 0..layer.out_dim {
                    let d = delta.at(r, o);
                    if d == T::zero() {
                        continue;
                    }
                    let w_row = &mut grad.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (gw, xi) in w_row.iter_mut().zip(x) {
                        *gw += d * *xi;
                    }
                    grad.bias[o] += d;
                }
            }
            if idx == 0 {
                break;
            }
            // Propagate through this layer's weights and the previous
            // layer's leaky rectifier (its output is `input`).
            let mut prev = Matrix::zeros(delta.rows, layer.in_dim);
            for r in 0..delta.rows {
                for o in 0..layer.out_dim {
                    let d = delta.at(r, o);
                    if d == T::zero() {
                        continue;
                    }
                    let w_row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (i, wi) in w_row.iter().enumerate() {
                        *prev.at_mut(r, i) += d * *wi;
                    }
                }
                for i in 0..layer.in_dim {
                    let act = input.at(r, i);
                    if act < T::zero() {
                        *prev.at_mut(r, i) *= slope;
                    }
                }
            }
            delta = prev;
        }
        Ok(grads)
    }
}

/// Intermediate activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// Input to each layer (the batch itself first).
    pub layer_inputs: Vec<Matrix<T>>,
    /// Output probabilities.
    pub probs: Matrix<T>,
}

/// Temporal pooling of a spectral feature: per frequency bin, the mean and
/// population standard deviation of the compressed magnitude over frames.
/// Layout: `[means (F), stds (F)]`.
pub fn pool<T: Scalar>(feature: &SpectralFeature) -> Result<Vec<T>, ModelError> {
    if feature.frames == 0 {
        return Err(ModelError::EmptyFeature);
    }
    let frames = feature.frames;
    let bins = feature.bins;
    let mut out = vec![T::zero(); 2 * bins];
    // Two-pass accumulation in f64 regardless of storage type.
    for bin in 0..bins {
        let mut sum = 0.0f64;
        for t in 0..frames {
            sum += feature.magnitude(t, bin) as f64;
        }
        let mean = sum / frames as f64;
        let mut var = 0.0f64;
        for t in 0..frames {
            let d = feature.magnitude(t, bin) as f64 - mean;
            var += d * d;
        }
        out[bin] = real::<T>(mean);
        out[bins + bin] = real::<T>((var / frames as f64).sqrt());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_net(seed: u64) -> Network<f64> {
        Network::init(&ModelConfig::new(5, &[4, 3], 2), seed)
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = small_net(1);
        let b = small_net(1);
        let c = small_net(2);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let bound0 = (6.0f64 / (5.0 + 4.0)).sqrt();
        for &w in &a.layers[0].weights {
            assert!(w.abs() <= bound0);
        }
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn zero_parameters_give_one_half() {
        let net = small_net(1).zeros_like();
        let input = Matrix::from_rows(vec![vec![0.3, -0.2, 0.5, 1.0, -1.0]]);
        let probs = net.forward(&input).unwrap();
        for c in 0..probs.cols {
            assert_eq!(probs.at(0, c), 0.5);
        }
    }

    #[test]
    fn large_output_bias_saturates() {
        let mut net = small_net(1);
        net.layers.last_mut().unwrap().bias[1] = 20.0;
        let input = Matrix::from_rows(vec![vec![0.0; 5]]);
        let probs = net.forward(&input).unwrap();
        assert!(probs.at(0, 1) > 0.999_999);
        assert!(probs.at(0, 1) < 1.0, "probabilities stay inside (0,1)");
    }

    /// Straightforward layer-by-layer reimplementation used as the forward
    /// oracle.
    fn forward_oracle(net: &Network<f64>, input: &[f64]) -> Vec<f64> {
        let mut x = input.to_vec();
        for (idx, layer) in net.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.out_dim];
            for (o, slot) in next.iter_mut().enumerate() {
                let mut acc = layer.bias[o];
                for i in 0..layer.in_dim {
                    acc += layer.weights[o * layer.in_dim + i] * x[i];
                }
                *slot = if idx + 1 == net.layers.len() {
                    1.0 / (1.0 + (-acc).exp())
                } else if acc >= 0.0 {
                    acc
                } else {
                    LEAKY_SLOPE * acc
                };
            }
            x = next;
        }
        x
    }

    #[test]
    fn forward_matches_independent_oracle() {
        let mut rng = crate::rng::seeded_rng(9);
        use rand::Rng as _;
        for trial in 0..20 {
            let net = small_net(trial);
            let input: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let probs = net
                .forward(&Matrix::from_rows(vec![input.clone()]))
                .unwrap();
            let oracle = forward_oracle(&net, &input);
            for c in 0..2 {
                assert!(
                    (probs.at(0, c) - oracle[c]).abs() < 1e-6,
                    "trial {trial} class {c}: {} vs {}",
                    probs.at(0, c),
                    oracle[c]
                );
            }
        }
    }

    #[test]
    fn input_dim_mismatch_is_an_error() {
        let net = small_net(1);
        let input = Matrix::from_rows(vec![vec![0.0; 4]]);
        assert!(matches!(
            net.forward(&input),
            Err(ModelError::InputDim { got: 4, want: 5 })
        ));
    }

    #[test]
    fn pool_single_frame_has_zero_std() {
        let feature = SpectralFeature {
            frames: 1,
            bins: 3,
            data: vec![3.0, 4.0, 1.0, 0.0, 0.0, 2.0],
        };
        let pooled: Vec<f64> = pool(&feature).unwrap();
        assert_eq!(pooled.len(), 6);
        assert!((pooled[0] - 5.0).abs() < 1e-12); // sqrt(9+16)
        assert_eq!(&pooled[3..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn pool_constant_magnitude_has_zero_std() {
        // Same magnitude in every frame, varying phase.
        let feature = SpectralFeature {
            frames: 3,
            bins: 1,
            data: vec![2.0, 0.0, 0.0, 2.0, -2.0, 0.0],
        };
        let pooled: Vec<f32> = pool(&feature).unwrap();
        assert!((pooled[0] - 2.0).abs() < 1e-6);
        assert!(pooled[1].abs() < 1e-6);
    }

    #[test]
    fn pool_matches_two_pass_oracle() {
        let mut rng = crate::rng::seeded_rng(13);
        use rand::Rng as _;
        let frames = 50;
        let bins = 17;
        let data: Vec<f32> = (0..frames * bins * 2)
            .map(|_| rng.random_range(-1.0f32..1.0))
            .collect();
        let feature = SpectralFeature { frames, bins, data };
        let pooled: Vec<f64> = pool(&feature).unwrap();
        for bin in 0..bins {
            let mags: Vec<f64> = (0..frames)
                .map(|t| feature.magnitude(t, bin) as f64)
                .collect();
            let mean = mags.iter().sum::<f64>() / frames as f64;
            let var = mags.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / frames as f64;
            assert!((pooled[bin] - mean).abs() < 1e-6);
            assert!((pooled[bins + bin] - var.sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn pool_rejects_zero_frames() {
        let feature = SpectralFeature {
            frames: 0,
            bins: 4,
            data: vec![],
        };
        assert!(matches!(
            pool::<f32>(&feature),
            Err(ModelError::EmptyFeature)
        ));
    }
}
