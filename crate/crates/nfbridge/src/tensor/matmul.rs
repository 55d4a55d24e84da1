//! Internal f64 matrix kernels for the MLP forward/backward passes.
//!
//! Stored tensors are f32; all arithmetic here runs in f64. Every output
//! element is a dot product accumulated in a fixed order (stride-4 partial
//! sums, combined left to right), so results are bit-identical regardless of
//! how rows are distributed across threads.

use rayon::prelude::*;

#[derive(Debug, Clone)]
pub(crate) struct MatF64 {
    pub data: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl MatF64 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatF64 {
            data: vec![0.0; rows * cols],
            rows,
            cols,
        }
    }

    pub fn from_f32(data: &[f32], rows: usize, cols: usize) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        MatF64 {
            data: data.iter().map(|&x| x as f64).collect(),
            rows,
            cols,
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Dot product with four partial sums. The grouping is fixed, so the result
/// is deterministic for a given input.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

/// C = A · Bᵀ where A is m×k and B is n×k; C is m×n.
///
/// This is the layout-native product for row-major activations against
/// out×in weight matrices: C[i][j] = dot(A.row(i), B.row(j)).
pub(crate) fn matmul_abt(a: &MatF64, b: &MatF64) -> MatF64 {
    assert_eq!(a.cols, b.cols, "inner dimensions must match");
    let (m, n, k) = (a.rows, b.rows, a.cols);
    let mut c = MatF64::zeros(m, n);
    c.data.par_chunks_mut(n).enumerate().for_each(|(i, c_row)| {
        let a_row = &a.data[i * k..(i + 1) * k];
        for (j, out) in c_row.iter_mut().enumerate() {
            *out = dot(a_row, b.row(j));
        }
    });
    c
}

/// C = Aᵀ · B where A is m×k and B is m×n; C is k×n.
///
/// Used for weight gradients: dW[o][i] = Σ_b G[b][o]·X[b][i], with G passed
/// as `a` (m×k = batch×out) and X as `b` (m×n = batch×in).
pub(crate) fn matmul_atb(a: &MatF64, b: &MatF64) -> MatF64 {
    assert_eq!(a.rows, b.rows, "batch dimensions must match");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut c = MatF64::zeros(k, n);
    c.data.par_chunks_mut(n).enumerate().for_each(|(o, c_row)| {
        for bidx in 0..m {
            let s = a.data[bidx * k + o];
            if s != 0.0 {
                let b_row = &b.data[bidx * n..(bidx + 1) * n];
                for (out, &x) in c_row.iter_mut().zip(b_row) {
                    *out += s * x;
                }
            }
        }
    });
    c
}

/// C = A · B where A is m×k and B is k×n; C is m×n.
///
/// Used for input gradients: dX[b][i] = Σ_o G[b][o]·W[o][i].
pub(crate) fn matmul_ab(a: &MatF64, b: &MatF64) -> MatF64 {
    assert_eq!(a.cols, b.rows, "inner dimensions must match");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut c = MatF64::zeros(m, n);
    c.data.par_chunks_mut(n).enumerate().for_each(|(i, c_row)| {
        for o in 0..k {
            let s = a.data[i * k + o];
            if s != 0.0 {
                let b_row = &b.data[o * n..(o + 1) * n];
                for (out, &x) in c_row.iter_mut().zip(b_row) {
                    *out += s * x;
                }
            }
        }
    });
    c
}
