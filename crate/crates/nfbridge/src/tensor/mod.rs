//! Dense f32 vectors/matrices and the numeric kernels of the mapping
//! networks: GELU, cosine similarity, the cosine distance loss, and the MLP
//! forward/backward passes.
//!
//! Storage is 32-bit; every dot product, norm, and reduction accumulates in
//! 64-bit. All functions here are pure; values are freely shareable across
//! threads.

mod matmul;
mod mlp;

pub use mlp::{mlp_backward, mlp_forward, ForwardCache, GradientBuffer, MlpParams};

pub(crate) use matmul::MatF64;

use crate::error::{Error, Result};

/// Norm floor below which a vector is considered degenerate.
pub const NORM_EPS: f64 = 1e-12;

/// A dense f32 vector. Finiteness of entries read from disk is enforced by
/// the I/O layer; in-process constructions are trusted.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    data: Vec<f32>,
}

impl Vector {
    pub fn new(data: Vec<f32>) -> Self {
        Vector { data }
    }

    pub fn zeros(dim: usize) -> Self {
        Vector {
            data: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    /// Euclidean norm, accumulated in f64.
    pub fn norm(&self) -> f64 {
        let w = widen(&self.data);
        matmul::dot(&w, &w).sqrt()
    }

    /// Returns the unit-norm copy and the original norm.
    pub fn normalized(&self) -> Result<(Vector, f32)> {
        let n = self.norm();
        if n <= NORM_EPS {
            return Err(Error::DegenerateVector {
                context: "normalize".into(),
            });
        }
        let inv = 1.0 / n;
        Ok((
            Vector::new(self.data.iter().map(|&x| (x as f64 * inv) as f32).collect()),
            n as f32,
        ))
    }
}

/// A dense row-major f32 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    data: Vec<f32>,
    rows: usize,
    cols: usize,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            data: vec![0.0; rows * cols],
            rows,
            cols,
        }
    }

    pub fn from_vec(data: Vec<f32>, rows: usize, cols: usize) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim("matrix data length", rows * cols, data.len()));
        }
        Ok(Matrix { data, rows, cols })
    }

    /// Stack row vectors into a matrix. Errors on inconsistent dimensions or
    /// an empty input.
    pub fn from_rows(rows: &[&Vector]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyInput("from_rows"))?;
        let cols = first.dim();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.dim() != cols {
                return Err(Error::dim("row width", cols, r.dim()));
            }
            data.extend_from_slice(r.as_slice());
        }
        Ok(Matrix {
            data,
            rows: rows.len(),
            cols,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn row_vector(&self, i: usize) -> Vector {
        Vector::new(self.row(i).to_vec())
    }

    pub(crate) fn to_f64(&self) -> MatF64 {
        MatF64::from_f32(&self.data, self.rows, self.cols)
    }

    pub(crate) fn from_f64(m: &MatF64) -> Self {
        Matrix {
            data: m.data.iter().map(|&x| x as f32).collect(),
            rows: m.rows,
            cols: m.cols,
        }
    }
}

/// Exact GELU: x·Φ(x) with Φ the standard Gaussian CDF via `erf`.
pub fn gelu(x: f64) -> f64 {
    x * normal_cdf(x)
}

/// Derivative of [`gelu`]: Φ(x) + x·φ(x).
pub fn gelu_grad(x: f64) -> f64 {
    normal_cdf(x) + x * normal_pdf(x)
}

#[inline]
fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x * std::f64::consts::FRAC_1_SQRT_2))
}

#[inline]
fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.3989422804014327;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

fn widen(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

fn dot_and_norms(a: &[f32], b: &[f32]) -> (f64, f64, f64) {
    let (aw, bw) = (widen(a), widen(b));
    (
        matmul::dot(&aw, &bw),
        matmul::dot(&aw, &aw).sqrt(),
        matmul::dot(&bw, &bw).sqrt(),
    )
}

/// Cosine similarity a·b / (‖a‖‖b‖), accumulated in f64.
pub fn cosine_similarity(a: &Vector, b: &Vector) -> Result<f32> {
    if a.dim() != b.dim() {
        return Err(Error::dim("cosine_similarity", a.dim(), b.dim()));
    }
    let (d, na, nb) = dot_and_norms(a.as_slice(), b.as_slice());
    if na <= NORM_EPS || nb <= NORM_EPS {
        return Err(Error::DegenerateVector {
            context: "cosine_similarity".into(),
        });
    }
    Ok((d / (na * nb)) as f32)
}

/// Cosine distance loss 1 − cos(pred, target) and its gradient with respect
/// to `pred` (target held constant).
///
/// grad_i = cos·p_i/‖p‖² − t_i/(‖p‖‖t‖)
pub fn cosine_loss_and_grad(pred: &Vector, target: &Vector) -> Result<(f32, Vector)> {
    if pred.dim() != target.dim() {
        return Err(Error::dim("cosine_loss", target.dim(), pred.dim()));
    }
    let (d, np, nt) = dot_and_norms(pred.as_slice(), target.as_slice());
    if np <= NORM_EPS || nt <= NORM_EPS {
        return Err(Error::DegenerateVector {
            context: "cosine_loss".into(),
        });
    }
    let cos = d / (np * nt);
    let inv_np2 = 1.0 / (np * np);
    let inv_npnt = 1.0 / (np * nt);
    let grad = Vector::new(
        pred.as_slice()
            .iter()
            .zip(target.as_slice())
            .map(|(&p, &t)| (cos * p as f64 * inv_np2 - t as f64 * inv_npnt) as f32)
            .collect(),
    );
    Ok(((1.0 - cos) as f32, grad))
}

/// Arithmetic mean over rows, accumulated in f64. The result is not
/// renormalized.
pub fn mean_rows(m: &Matrix) -> Result<Vector> {
    if m.rows() == 0 {
        return Err(Error::EmptyInput("mean_rows"));
    }
    let mut acc = vec![0.0f64; m.cols()];
    for i in 0..m.rows() {
        for (a, &x) in acc.iter_mut().zip(m.row(i)) {
            *a += x as f64;
        }
    }
    let inv = 1.0 / m.rows() as f64;
    Ok(Vector::new(acc.iter().map(|&a| (a * inv) as f32).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    // High-precision reference values (40-digit erf/pdf evaluation):
    //   Φ(1)           = 0.8413447460685429485852325456320379224779
    //   Φ(1) + φ(1)    = 1.083315470587686298383062738567598577307
    //   gelu(0.5)      = 0.3457312306370065518188523053041688699418
    const GELU_1: f64 = 0.8413447460685429;
    const GELU_GRAD_1: f64 = 1.0833154705876863;
    const GELU_HALF: f64 = 0.34573123063700655;

    #[test]
    fn gelu_frozen_values() {
        assert_eq!(gelu(0.0), 0.0);
        assert!((gelu(1.0) - GELU_1).abs() < 1e-6);
        assert!((gelu(0.5) - GELU_HALF).abs() < 1e-9);
        assert!((gelu(10.0) - 10.0).abs() < 1e-6);
    }

    #[test]
    fn gelu_grad_frozen_values() {
        assert_eq!(gelu_grad(0.0), 0.5);
        assert!((gelu_grad(1.0) - GELU_GRAD_1).abs() < 1e-9);
    }

    #[test]
    fn gelu_grad_matches_finite_differences() {
        let h = 1e-6;
        for i in -40..=40 {
            let x = i as f64 * 0.25;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!(
                (gelu_grad(x) - fd).abs() < 1e-5,
                "x={x}: grad {} vs fd {fd}",
                gelu_grad(x)
            );
        }
    }

    #[test]
    fn gelu_reflection_identity() {
        // gelu(x) − gelu(−x) == x·(Φ(x)+Φ(−x)) == x
        for i in 0..100 {
            let x = i as f64 * 0.1;
            assert!((gelu(x) - gelu(-x) - x).abs() < 1e-6);
        }
    }

    #[test]
    fn gelu_monotone_nonneg() {
        let mut prev = gelu(0.0);
        for i in 1..=500 {
            let cur = gelu(i as f64 * 0.02);
            assert!(cur >= prev);
            prev = cur;
        }
    }

    #[test]
    fn cosine_similarity_basics() {
        let e1 = Vector::new(vec![1.0, 0.0]);
        let e2 = Vector::new(vec![0.0, 1.0]);
        assert_eq!(cosine_similarity(&e1, &e2).unwrap(), 0.0);

        let a = Vector::new(vec![1.0, 2.0]);
        let b = Vector::new(vec![2.0, 4.0]);
        assert!((cosine_similarity(&a, &b).unwrap() - 1.0).abs() < 1e-6);

        let c = Vector::new(vec![1.0, 1.0]);
        let d = Vector::new(vec![-1.0, -1.0]);
        assert!((cosine_similarity(&c, &d).unwrap() + 1.0).abs() < 1e-6);
    }

    #[test]
    fn cosine_similarity_degenerate() {
        let z = Vector::zeros(3);
        let a = Vector::new(vec![1.0, 0.0, 0.0]);
        assert!(matches!(
            cosine_similarity(&z, &a),
            Err(Error::DegenerateVector { .. })
        ));
    }

    #[test]
    fn cosine_loss_at_target() {
        let t = Vector::new(vec![0.3, -1.2, 0.7]);
        let (loss, grad) = cosine_loss_and_grad(&t, &t).unwrap();
        assert!(loss.abs() < 1e-6);
        // component of grad along pred is zero
        let along: f64 = grad
            .as_slice()
            .iter()
            .zip(t.as_slice())
            .map(|(&g, &p)| g as f64 * p as f64)
            .sum();
        assert!(along.abs() < 1e-6);
    }

    #[test]
    fn cosine_loss_orthogonal() {
        let p = Vector::new(vec![1.0, 0.0]);
        let t = Vector::new(vec![0.0, 2.0]);
        let (loss, _) = cosine_loss_and_grad(&p, &t).unwrap();
        assert!((loss - 1.0).abs() < 1e-6);
    }

    #[test]
    fn cosine_loss_grad_matches_finite_differences() {
        // 8-d fixed pseudo-random pair; FD on the f64 formula.
        let p: Vec<f32> = vec![0.3, -1.1, 0.45, 2.0, -0.8, 0.05, 1.3, -0.6];
        let t: Vec<f32> = vec![-0.2, 0.9, 1.5, -0.4, 0.6, -1.2, 0.07, 0.8];
        let pred = Vector::new(p.clone());
        let target = Vector::new(t.clone());
        let (_, grad) = cosine_loss_and_grad(&pred, &target).unwrap();

        let loss64 = |pv: &[f64]| -> f64 {
            let tv: Vec<f64> = t.iter().map(|&x| x as f64).collect();
            let d: f64 = pv.iter().zip(&tv).map(|(a, b)| a * b).sum();
            let np = pv.iter().map(|a| a * a).sum::<f64>().sqrt();
            let nt = tv.iter().map(|a| a * a).sum::<f64>().sqrt();
            1.0 - d / (np * nt)
        };
        let h = 1e-6;
        for i in 0..p.len() {
            let mut plus: Vec<f64> = p.iter().map(|&x| x as f64).collect();
            let mut minus = plus.clone();
            plus[i] += h;
            minus[i] -= h;
            let fd = (loss64(&plus) - loss64(&minus)) / (2.0 * h);
            let g = grad.as_slice()[i] as f64;
            assert!(
                (g - fd).abs() <= 1e-4 * fd.abs().max(g.abs()).max(1e-3),
                "i={i}: grad {g} vs fd {fd}"
            );
        }
    }

    #[test]
    fn mean_rows_basics() {
        let m = Matrix::from_vec(vec![1.0, 0.0, 0.0, 1.0], 2, 2).unwrap();
        assert_eq!(mean_rows(&m).unwrap().as_slice(), &[0.5, 0.5]);

        let single = Matrix::from_vec(vec![3.0, -2.0, 0.5], 1, 3).unwrap();
        assert_eq!(mean_rows(&single).unwrap().as_slice(), &[3.0, -2.0, 0.5]);

        let r = vec![0.25f32, -1.5, 2.0];
        let mut data = Vec::new();
        for _ in 0..36 {
            data.extend_from_slice(&r);
        }
        let rep = Matrix::from_vec(data, 36, 3).unwrap();
        assert_eq!(mean_rows(&rep).unwrap().as_slice(), r.as_slice());
    }

    #[test]
    fn mean_rows_empty() {
        let m = Matrix::zeros(0, 4);
        assert!(matches!(mean_rows(&m), Err(Error::EmptyInput(_))));
    }
}
