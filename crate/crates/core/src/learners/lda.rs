use nalgebra::{DMatrix, DVector};

use super::{dot, sigmoid};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Two-class linear discriminant with a pooled covariance matrix.
///
/// The posterior P(faller | x) is `sigmoid(w·x + b)` with
/// `w = Σ⁻¹ (μ₁ − μ₀)` and `b = −½ (μ₁ᵀΣ⁻¹μ₁ − μ₀ᵀΣ⁻¹μ₀) + ln(π₁ / π₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lda {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Ridge added to the pooled covariance diagonal (0 unless singular).
    pub shrinkage: f64,
}

impl Lda {
    pub fn fit(x: &Matrix, y: &[bool]) -> Result<Self> {
        let p = x.ncols();
        let mut mean = [DVector::<f64>::zeros(p), DVector::zeros(p)];
        let mut count = [0usize; 2];
        for (row, &label) in x.rows().zip(y) {
            let c = usize::from(label);
            count[c] += 1;
            for (m, v) in mean[c].iter_mut().zip(row) {
                *m += v;
            }
        }
        for c in 0..2 {
            mean[c] /= count[c] as f64;
        }
        let mut cov = DMatrix::<f64>::zeros(p, p);
        for (row, &label) in x.rows().zip(y) {
            let d = DVector::from_column_slice(row) - &mean[usize::from(label)];
            cov += &d * d.transpose();
        }
        let dof = (x.nrows() as f64 - 2.0).max(1.0);
        cov /= dof;

        let diff = &mean[1] - &mean[0];
        let trace = cov.trace();
        let smallest = cov.clone().symmetric_eigenvalues().min();
        let mut shrinkage = 0.0;
        if smallest <= 1e-10 * trace.max(f64::MIN_POSITIVE) {
            shrinkage = 1e-6 * if trace > 0.0 { trace / p as f64 } else { 1.0 };
            for j in 0..p {
                cov[(j, j)] += shrinkage;
            }
        }
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::Undefined("LDA covariance is not positive definite".into()))?;
        let w = chol.solve(&diff);
        let a1 = chol.solve(&mean[1]);
        let a0 = chol.solve(&mean[0]);
        let prior = (count[1] as f64 / count[0] as f64).ln();
        let bias = -0.5 * (mean[1].dot(&a1) - mean[0].dot(&a0)) + prior;
        Ok(Self { weights: w.iter().copied().collect(), bias, shrinkage })
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(dot(&self.weights, x) + self.bias)
    }

    pub fn parameters(&self) -> Vec<f64> {
        let mut v = vec![self.bias, self.shrinkage];
        v.extend_from_slice(&self.weights);
        v
    }
}
