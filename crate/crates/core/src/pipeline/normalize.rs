use std::hash::{DefaultHasher, Hasher};

use crate::matrix::Matrix;

/// Per-column centering and scaling learned from training rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    /// Population standard deviation, or 1 for a constant column.
    pub scale: Vec<f64>,
}

impl Normalizer {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.nrows().max(1) as f64;
        let (mut mean, mut scale) = (Vec::new(), Vec::new());
        for j in 0..x.ncols() {
            let m = x.column(j).sum::<f64>() / n;
            let var = x.column(j).map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let sd = var.sqrt();
            mean.push(m);
            scale.push(if sd > 1e-12 * m.abs().max(1.0) { sd } else { 1.0 });
        }
        Self { mean, scale }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.nrows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.scale[j];
            }
        }
        out
    }

    pub fn apply_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(j, v)| (v - self.mean[j]) / self.scale[j]).collect()
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for v in self.mean.iter().chain(&self.scale) {
            h.write_u64(v.to_bits());
        }
        h.finish()
    }
}
