//! Dense symmetric positive definite solves, just large enough for ridge
//! regression on small feature spaces. Row-major storage throughout.

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of an SPD matrix.
pub struct Cholesky {
    dim: usize,
    factor: Vec<f64>,
}

impl Cholesky {
    /// Factor a row-major `dim x dim` SPD matrix. Fails if a pivot is not
    /// strictly positive, which for our Gram matrices (identity plus rank-one
    /// updates) only happens on NaN/Inf contamination.
    pub fn factor(matrix: &[f64], dim: usize) -> Result<Self> {
        assert_eq!(matrix.len(), dim * dim, "matrix shape mismatch");
        let mut l = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let mut sum = matrix[i * dim + j];
                for k in 0..j {
                    sum -= l[i * dim + k] * l[j * dim + k];
                }
                if i == j {
                    if !(sum > 0.0) {
                        return Err(Error::Numerical(format!(
                            "cholesky pivot {i} not positive: {sum}"
                        )));
                    }
                    l[i * dim + j] = sum.sqrt();
                } else {
                    l[i * dim + j] = sum / l[j * dim + j];
                }
            }
        }
        Ok(Self { dim, factor: l })
    }

    /// Solve `A x = b` given the factor of `A`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.dim, "rhs length mismatch");
        let d = self.dim;
        let l = &self.factor;
        // forward: L y = b
        let mut y = vec![0.0; d];
        for i in 0..d {
            let mut sum = b[i];
            for k in 0..i {
                sum -= l[i * d + k] * y[k];
            }
            y[i] = sum / l[i * d + i];
        }
        // backward: L^T x = y
        let mut x = vec![0.0; d];
        for i in (0..d).rev() {
            let mut sum = y[i];
            for k in (i + 1)..d {
                sum -= l[k * d + i] * x[k];
            }
            x[i] = sum / l[i * d + i];
        }
        x
    }

    /// Quadratic form `x^T A^{-1} x` via one triangular solve:
    /// with `L w = x`, the form equals `w^T w`.
    pub fn inv_quad_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "vector length mismatch");
        let d = self.dim;
        let l = &self.factor;
        let mut w = vec![0.0; d];
        let mut acc = 0.0;
        for i in 0..d {
            let mut sum = x[i];
            for k in 0..i {
                sum -= l[i * d + k] * w[k];
            }
            let wi = sum / l[i * d + i];
            w[i] = wi;
            acc += wi * wi;
        }
        acc
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
