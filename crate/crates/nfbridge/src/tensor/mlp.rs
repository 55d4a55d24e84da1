//! MLP parameters and the forward/backward passes.
//!
//! The network is a chain of affine layers with GELU after every hidden
//! layer and a linear output layer. Forward caches pre- and post-activations
//! in f64 so the backward pass computes exact reverse-mode gradients of the
//! widened computation; gradients are summed (not averaged) over the batch.

use super::matmul::{matmul_ab, matmul_abt, matmul_atb, MatF64};
use super::{gelu, gelu_grad, Matrix, Vector};
use crate::error::{Error, Result};

/// Weights and biases of a mapping network. `weights[k]` is out×in
/// (`layer_dims[k+1]` × `layer_dims[k]`), `biases[k]` has `layer_dims[k+1]`
/// entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layer_dims: Vec<usize>,
    weights: Vec<Matrix>,
    biases: Vec<Vector>,
}

impl MlpParams {
    /// All-zero parameters for the given layer chain.
    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::ConfigMismatch(format!(
                "an MLP needs at least two layer dims, got {layer_dims:?}"
            )));
        }
        if layer_dims.contains(&0) {
            return Err(Error::ConfigMismatch(format!(
                "layer dims must be positive, got {layer_dims:?}"
            )));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in layer_dims.windows(2) {
            weights.push(Matrix::zeros(pair[1], pair[0]));
            biases.push(Vector::zeros(pair[1]));
        }
        Ok(MlpParams {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
        })
    }

    /// Assemble from explicit weights and biases, validating the dimension
    /// chain.
    pub fn from_parts(weights: Vec<Matrix>, biases: Vec<Vector>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::ConfigMismatch(format!(
                "got {} weight matrices and {} bias vectors",
                weights.len(),
                biases.len()
            )));
        }
        let mut layer_dims = vec![weights[0].cols()];
        for (k, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.cols() != layer_dims[k] {
                return Err(Error::dim(
                    format!("weights[{k}].cols"),
                    layer_dims[k],
                    w.cols(),
                ));
            }
            if b.dim() != w.rows() {
                return Err(Error::dim(format!("biases[{k}].dim"), w.rows(), b.dim()));
            }
            layer_dims.push(w.rows());
        }
        Ok(MlpParams {
            layer_dims,
            weights,
            biases,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn weight(&self, k: usize) -> &Matrix {
        &self.weights[k]
    }

    pub fn bias(&self, k: usize) -> &Vector {
        &self.biases[k]
    }

    pub fn weight_mut(&mut self, k: usize) -> &mut Matrix {
        &mut self.weights[k]
    }

    pub fn bias_mut(&mut self, k: usize) -> &mut Vector {
        &mut self.biases[k]
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.weights
            .iter()
            .map(|w| w.rows() * w.cols())
            .sum::<usize>()
            + self.biases.iter().map(|b| b.dim()).sum::<usize>()
    }

    /// Parameters packed layer by layer (weights row-major, then bias).
    pub fn pack(&self) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.param_count());
        for k in 0..self.num_layers() {
            out.extend_from_slice(self.weights[k].as_slice());
            out.extend_from_slice(self.biases[k].as_slice());
        }
        out
    }

    /// Inverse of [`pack`](Self::pack).
    pub fn unpack(layer_dims: &[usize], flat: &[f32]) -> Result<Self> {
        let mut params = MlpParams::zeros(layer_dims)?;
        if flat.len() != params.param_count() {
            return Err(Error::dim(
                "packed parameter count",
                params.param_count(),
                flat.len(),
            ));
        }
        let mut at = 0;
        for k in 0..params.num_layers() {
            let wlen = params.weights[k].rows() * params.weights[k].cols();
            params.weights[k]
                .as_mut_slice()
                .copy_from_slice(&flat[at..at + wlen]);
            at += wlen;
            let blen = params.biases[k].dim();
            params.biases[k]
                .as_mut_slice()
                .copy_from_slice(&flat[at..at + blen]);
            at += blen;
        }
        Ok(params)
    }
}

/// Per-layer pre- and post-activations of one forward pass, kept in f64 for
/// the backward pass.
#[derive(Debug)]
pub struct ForwardCache {
    batch: usize,
    input: MatF64,
    pre_acts: Vec<MatF64>,
    post_acts: Vec<MatF64>,
}

impl ForwardCache {
    pub fn batch(&self) -> usize {
        self.batch
    }
}

/// Gradients with the same shape as their [`MlpParams`].
#[derive(Debug, Clone)]
pub struct GradientBuffer {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vector>,
}

impl GradientBuffer {
    pub fn zeros_like(params: &MlpParams) -> Self {
        GradientBuffer {
            weights: params
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: params
                .biases
                .iter()
                .map(|b| Vector::zeros(b.dim()))
                .collect(),
        }
    }
}

/// Run the network on a batch (rows are samples). Affine → GELU on every
/// hidden layer, linear output.
pub fn mlp_forward(params: &MlpParams, input_batch: &Matrix) -> Result<(Matrix, ForwardCache)> {
    if input_batch.cols() != params.input_dim() {
        return Err(Error::dim(
            "mlp_forward input width",
            params.input_dim(),
            input_batch.cols(),
        ));
    }
    let batch = input_batch.rows();
    let input = input_batch.to_f64();
    let n_layers = params.num_layers();
    let mut pre_acts = Vec::with_capacity(n_layers);
    let mut post_acts = Vec::with_capacity(n_layers);

    for k in 0..n_layers {
        let x = if k == 0 { &input } else { &post_acts[k - 1] };
        let w = params.weights[k].to_f64();
        let mut z = matmul_abt(x, &w);
        let b: Vec<f64> = params.biases[k]
            .as_slice()
            .iter()
            .map(|&v| v as f64)
            .collect();
        for r in 0..batch {
            let row = &mut z.data[r * z.cols..(r + 1) * z.cols];
            for (zv, bv) in row.iter_mut().zip(&b) {
                *zv += bv;
            }
        }
        let a = if k + 1 < n_layers {
            let mut a = z.clone();
            for v in a.data.iter_mut() {
                *v = gelu(*v);
            }
            a
        } else {
            z.clone()
        };
        pre_acts.push(z);
        post_acts.push(a);
    }

    let output = Matrix::from_f64(post_acts.last().unwrap());
    Ok((
        output,
        ForwardCache {
            batch,
            input,
            pre_acts,
            post_acts,
        },
    ))
}

/// Exact reverse-mode gradients of all weights and biases, summed over the
/// batch. `output_grad` is dLoss/dOutput with the forward output's shape.
pub fn mlp_backward(
    params: &MlpParams,
    cache: &ForwardCache,
    output_grad: &Matrix,
) -> Result<GradientBuffer> {
    let out_dim = params.output_dim();
    if output_grad.cols() != out_dim {
        return Err(Error::dim(
            "mlp_backward output width",
            out_dim,
            output_grad.cols(),
        ));
    }
    if output_grad.rows() != cache.batch {
        return Err(Error::dim(
            "mlp_backward batch",
            cache.batch,
            output_grad.rows(),
        ));
    }

    let n_layers = params.num_layers();
    let mut grads = GradientBuffer::zeros_like(params);
    // dL/dZ for the current layer; output layer is linear so it starts as
    // the output gradient itself.
    let mut delta = output_grad.to_f64();

    for k in (0..n_layers).rev() {
        let x = if k == 0 {
            &cache.input
        } else {
            &cache.post_acts[k - 1]
        };
        // dW[o][i] = Σ_b delta[b][o] · x[b][i]
        let dw = matmul_atb(&delta, x);
        grads.weights[k] = Matrix::from_f64(&dw);
        // db[o] = Σ_b delta[b][o]
        let mut db = vec![0.0f64; delta.cols];
        for b in 0..delta.rows {
            for (acc, &g) in db.iter_mut().zip(delta.row(b)) {
                *acc += g;
            }
        }
        grads.biases[k] = Vector::new(db.iter().map(|&v| v as f32).collect());

        if k > 0 {
            let w = params.weights[k].to_f64();
            // dA_{k-1} = delta · W_k, then through the GELU of layer k-1.
            let mut da = matmul_ab(&delta, &w);
            let z_prev = &cache.pre_acts[k - 1];
            for (g, &z) in da.data.iter_mut().zip(&z_prev.data) {
                *g *= gelu_grad(z);
            }
            delta = da;
        }
    }
    Ok(grads)
}
