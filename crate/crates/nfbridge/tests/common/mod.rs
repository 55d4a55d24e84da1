//! Shared test oracles, independent of the library's gradient path.
//!
//! The reference MLP below re-implements the forward computation and the
//! cosine loss in plain f64 loops over the public parameter accessors, and
//! differentiates it by central finite differences. It never touches the
//! library's cache/backward machinery.

#![allow(dead_code)]

use nfbridge::tensor::{Matrix, MlpParams, Vector};
use rand::Rng;
use rand_distr::StandardNormal;
use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::Xoshiro256StarStar;

pub fn rng(seed: u64) -> Xoshiro256StarStar {
    Xoshiro256StarStar::seed_from_u64(seed)
}

/// f64 copies of an MLP's parameters, flattened layer by layer in the same
/// order as `MlpParams::pack` (weights row-major, then bias).
pub struct RefMlp {
    pub layer_dims: Vec<usize>,
    pub flat: Vec<f64>,
}

impl RefMlp {
    pub fn from_params(params: &MlpParams) -> Self {
        RefMlp {
            layer_dims: params.layer_dims().to_vec(),
            flat: params.pack().iter().map(|&x| x as f64).collect(),
        }
    }

    fn gelu(x: f64) -> f64 {
        0.5 * x * (1.0 + libm::erf(x * std::f64::consts::FRAC_1_SQRT_2))
    }

    /// Plain-loop forward for one sample.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let n_layers = self.layer_dims.len() - 1;
        let mut at = 0usize;
        let mut act: Vec<f64> = input.to_vec();
        for k in 0..n_layers {
            let (fan_in, fan_out) = (self.layer_dims[k], self.layer_dims[k + 1]);
            let w = &self.flat[at..at + fan_out * fan_in];
            at += fan_out * fan_in;
            let b = &self.flat[at..at + fan_out];
            at += fan_out;
            let mut next = vec![0.0f64; fan_out];
            for (o, nv) in next.iter_mut().enumerate() {
                let mut acc = b[o];
                for (i, &x) in act.iter().enumerate() {
                    acc += w[o * fan_in + i] * x;
                }
                *nv = if k + 1 < n_layers {
                    Self::gelu(acc)
                } else {
                    acc
                };
            }
            act = next;
        }
        act
    }

    /// Σ over the batch of (1 − cos(forward(xᵇ), tᵇ)): the scalar whose
    /// gradient `mlp_backward` reports when fed unscaled per-row cosine
    /// gradients.
    pub fn batch_cosine_loss(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> f64 {
        inputs
            .iter()
            .zip(targets)
            .map(|(x, t)| {
                let y = self.forward(x);
                let dot: f64 = y.iter().zip(t).map(|(a, b)| a * b).sum();
                let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
                let nt = t.iter().map(|a| a * a).sum::<f64>().sqrt();
                1.0 - dot / (ny * nt)
            })
            .sum()
    }

    /// Central finite differences of [`Self::batch_cosine_loss`] with
    /// respect to every parameter.
    pub fn fd_gradients(&mut self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Vec<f64> {
        let mut grads = vec![0.0f64; self.flat.len()];
        for (i, g) in grads.iter_mut().enumerate() {
            let orig = self.flat[i];
            let h = 1e-5 * orig.abs().max(1.0);
            self.flat[i] = orig + h;
            let plus = self.batch_cosine_loss(inputs, targets);
            self.flat[i] = orig - h;
            let minus = self.batch_cosine_loss(inputs, targets);
            self.flat[i] = orig;
            *g = (plus - minus) / (2.0 * h);
        }
        grads
    }
}

/// Relative error with a floor that keeps near-zero entries meaningful:
/// |a−b| / max(|a|, |b|, floor).
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

pub fn random_vector(rng: &mut impl Rng, dim: usize) -> Vector {
    Vector::new(
        (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal) as f32)
            .collect(),
    )
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(
        (0..rows * cols)
            .map(|_| rng.sample::<f64, _>(StandardNormal) as f32)
            .collect(),
        rows,
        cols,
    )
    .unwrap()
}
