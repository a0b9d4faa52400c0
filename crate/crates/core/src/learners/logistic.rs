use nalgebra::{DMatrix, DVector};

use super::{dot, sigmoid};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const TOL: f64 = 1e-8;
const MAX_ITER: usize = 100;
const SEPARATION_NORM: f64 = 1e3;
const SEPARATION_RIDGE: f64 = 1e-6;

/// Logistic regression fitted by Newton / iteratively reweighted least squares.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    pub intercept: f64,
    pub weights: Vec<f64>,
    /// Ridge penalty on the weights (not the intercept); non-zero only after
    /// separation was detected.
    pub ridge: f64,
}

impl LogisticRegression {
    pub fn fit(x: &Matrix, y: &[bool]) -> Result<Self> {
        match newton(x, y, 0.0) {
            Ok(beta) if beta.norm() <= SEPARATION_NORM && !separates(x, y, &beta) => {
                Ok(Self::from_beta(&beta, 0.0))
            }
            _ => {
                let beta = newton(x, y, SEPARATION_RIDGE)?;
                Ok(Self::from_beta(&beta, SEPARATION_RIDGE))
            }
        }
    }

    fn from_beta(beta: &DVector<f64>, ridge: f64) -> Self {
        Self { intercept: beta[0], weights: beta.iter().skip(1).copied().collect(), ridge }
    }

    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.intercept + dot(&self.weights, x)
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(x))
    }

    /// Gradient of the penalized log-likelihood at the fitted coefficients,
    /// intercept first.
    pub fn gradient(&self, x: &Matrix, y: &[bool]) -> Vec<f64> {
        let mut g = vec![0.0; self.weights.len() + 1];
        for (row, &label) in x.rows().zip(y) {
            let r = f64::from(u8::from(label)) - self.probability(row);
            g[0] += r;
            for (gj, xj) in g[1..].iter_mut().zip(row) {
                *gj += r * xj;
            }
        }
        for (gj, wj) in g[1..].iter_mut().zip(&self.weights) {
            *gj -= self.ridge * wj;
        }
        g
    }

    pub fn parameters(&self) -> Vec<f64> {
        let mut v = vec![self.intercept, self.ridge];
        v.extend_from_slice(&self.weights);
        v
    }
}

/// Complete separation: every fitted probability is within 1e-6 of its label,
/// so the unpenalized optimum lies at infinity.
fn separates(x: &Matrix, y: &[bool], beta: &DVector<f64>) -> bool {
    x.rows().zip(y).all(|(row, &label)| {
        let p = sigmoid(beta[0] + dot(&beta.as_slice()[1..], row));
        (p - f64::from(u8::from(label))).abs() < 1e-6
    })
}

fn penalized_loglik(design: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>, ridge: f64) -> f64 {
    let eta = design * beta;
    let ll: f64 = eta
        .iter()
        .zip(y)
        .map(|(&e, &t)| {
            // log(1 + exp(e)) without overflow
            let softplus = if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() };
            t * e - softplus
        })
        .sum();
    let pen: f64 = beta.iter().skip(1).map(|b| b * b).sum();
    ll - 0.5 * ridge * pen
}

fn newton(x: &Matrix, y: &[bool], ridge: f64) -> Result<DVector<f64>> {
    let n = x.nrows();
    let p = x.ncols() + 1;
    let design = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { x.get(i, j - 1) });
    let t: Vec<f64> = y.iter().map(|&b| f64::from(u8::from(b))).collect();
    let mut beta = DVector::zeros(p);
    let mut current = penalized_loglik(&design, &t, &beta, ridge);
    for _ in 0..MAX_ITER {
        let eta = &design * &beta;
        let mu: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        let mut grad = design.tr_mul(&DVector::from_iterator(
            n,
            t.iter().zip(&mu).map(|(t, m)| t - m),
        ));
        let mut weighted = design.clone();
        for (i, m) in mu.iter().enumerate() {
            let w = m * (1.0 - m);
            weighted.row_mut(i).scale_mut(w);
        }
        let mut hess = design.tr_mul(&weighted);
        for j in 1..p {
            grad[j] -= ridge * beta[j];
            hess[(j, j)] += ridge;
        }
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => hess
                .lu()
                .solve(&grad)
                .ok_or_else(|| Error::Undefined("singular logistic Hessian".into()))?,
        };
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate = &beta + &step * scale;
            let value = penalized_loglik(&design, &t, &candidate, ridge);
            if value >= current - 1e-12 * current.abs() {
                beta = candidate;
                current = value;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted || (&step * scale).amax() < TOL || grad.amax() < TOL {
            break;
        }
        if ridge == 0.0 && beta.norm() > SEPARATION_NORM {
            return Ok(beta);
        }
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Undefined("logistic regression diverged".into()));
    }
    Ok(beta)
}
