use super::sigmoid;
use crate::matrix::Matrix;

const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureModel {
    /// Per-class mean and variance (index 0 = non-faller, 1 = faller).
    Gaussian { mean: [f64; 2], var: [f64; 2] },
    /// Two-level feature: P(high level | class) with Laplace smoothing.
    Bernoulli { low: f64, high: f64, p_high: [f64; 2] },
}

/// Naive Bayes with Gaussian continuous features and Bernoulli two-level
/// features.
///
/// A training column with exactly two distinct values is treated as binary;
/// this keeps 0/1 answers binary after they have been standardized.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayes {
    pub log_prior_ratio: f64,
    pub features: Vec<FeatureModel>,
}

impl NaiveBayes {
    pub fn fit(x: &Matrix, y: &[bool]) -> Self {
        let n1 = y.iter().filter(|&&b| b).count() as f64;
        let n0 = y.len() as f64 - n1;
        let features = (0..x.ncols())
            .map(|j| {
                let col: Vec<f64> = x.column(j).collect();
                let mut levels = col.clone();
                levels.sort_by(f64::total_cmp);
                levels.dedup();
                if levels.len() == 2 {
                    let (low, high) = (levels[0], levels[1]);
                    let mut hits = [0.0; 2];
                    for (v, &label) in col.iter().zip(y) {
                        if *v == high {
                            hits[usize::from(label)] += 1.0;
                        }
                    }
                    FeatureModel::Bernoulli {
                        low,
                        high,
                        p_high: [(hits[0] + 1.0) / (n0 + 2.0), (hits[1] + 1.0) / (n1 + 2.0)],
                    }
                } else {
                    let mut sum = [0.0; 2];
                    for (v, &label) in col.iter().zip(y) {
                        sum[usize::from(label)] += v;
                    }
                    let mean = [sum[0] / n0, sum[1] / n1];
                    let mut ss = [0.0; 2];
                    for (v, &label) in col.iter().zip(y) {
                        let c = usize::from(label);
                        ss[c] += (v - mean[c]) * (v - mean[c]);
                    }
                    FeatureModel::Gaussian {
                        mean,
                        var: [(ss[0] / n0).max(VARIANCE_FLOOR), (ss[1] / n1).max(VARIANCE_FLOOR)],
                    }
                }
            })
            .collect();
        Self { log_prior_ratio: (n1 / n0).ln(), features }
    }

    /// log P(x | faller) − log P(x | non-faller) + log prior ratio.
    pub fn log_odds(&self, x: &[f64]) -> f64 {
        let mut z = self.log_prior_ratio;
        for (f, &v) in self.features.iter().zip(x) {
            z += match f {
                FeatureModel::Gaussian { mean, var } => {
                    let ll = |c: usize| {
                        -0.5 * (var[c].ln() + (v - mean[c]) * (v - mean[c]) / var[c])
                    };
                    ll(1) - ll(0)
                }
                FeatureModel::Bernoulli { low, high, p_high } => {
                    if v >= 0.5 * (low + high) {
                        (p_high[1] / p_high[0]).ln()
                    } else {
                        ((1.0 - p_high[1]) / (1.0 - p_high[0])).ln()
                    }
                }
            };
        }
        z
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.log_odds(x))
    }

    pub fn parameters(&self) -> Vec<f64> {
        let mut v = vec![self.log_prior_ratio];
        for f in &self.features {
            match f {
                FeatureModel::Gaussian { mean, var } => v.extend([mean[0], mean[1], var[0], var[1]]),
                FeatureModel::Bernoulli { low, high, p_high } => {
                    v.extend([*low, *high, p_high[0], p_high[1]])
                }
            }
        }
        v
    }
}
