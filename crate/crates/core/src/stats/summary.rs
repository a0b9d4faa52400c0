use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Minimum, quartiles, median, mean and maximum of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SixNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

impl SixNumberSummary {
    pub fn new(min: f64, q1: f64, median: f64, mean: f64, q3: f64, max: f64) -> Result<Self> {
        let s = Self { min, q1, median, mean, q3, max };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let ordered = self.min <= self.q1
            && self.q1 <= self.median
            && self.median <= self.q3
            && self.q3 <= self.max
            && self.min <= self.mean
            && self.mean <= self.max;
        if !ordered || ![self.min, self.q1, self.median, self.mean, self.q3, self.max]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(invalid(format!("six-number summary out of order: {self:?}")));
        }
        Ok(())
    }

    /// The five interpolation knots (min, q1, median, q3, max).
    pub fn knots(&self) -> [f64; 5] {
        [self.min, self.q1, self.median, self.q3, self.max]
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased (n - 1) sample variance.
pub fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() as f64 - 1.0)
}

/// Quantile of an ascending sample by linear interpolation at position
/// `p * (n - 1)` (zero-indexed).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn six_number_summary(values: &[f64]) -> Result<SixNumberSummary> {
    if values.is_empty() {
        return Err(invalid("six-number summary of an empty sample"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("six-number summary of a non-finite sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = mean(&sorted).clamp(sorted[0], sorted[sorted.len() - 1]);
    Ok(SixNumberSummary {
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        mean: m,
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn odd_length_symmetric() {
        let s = six_number_summary(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.mean, s.q3, s.max), (1.0, 2.0, 3.0, 3.0, 4.0, 5.0));
    }

    #[test]
    fn even_length_interpolates() {
        let s = six_number_summary(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.q1, 1.75);
        assert_eq!(s.q3, 3.25);
    }

    #[test]
    fn single_value_is_degenerate() {
        let s = six_number_summary(&[7.0]).unwrap();
        assert!(s.knots().iter().all(|&v| v == 7.0));
        assert_eq!(s.mean, 7.0);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(six_number_summary(&[]).is_err());
    }

    proptest! {
        #[test]
        fn permutation_invariant_and_affine_equivariant(
            mut xs in proptest::collection::vec(-1e3f64..1e3, 1..60),
            slope in 0.01f64..50.0,
            shift in -100f64..100.0,
        ) {
            let base = six_number_summary(&xs).unwrap();
            base.validate().unwrap();
            xs.reverse();
            let rev = six_number_summary(&xs).unwrap();
            for (a, b) in base.knots().iter().zip(rev.knots()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            let mapped: Vec<f64> = xs.iter().map(|x| slope * x + shift).collect();
            let m = six_number_summary(&mapped).unwrap();
            for (a, b) in base.knots().iter().zip(m.knots()) {
                prop_assert!((slope * a + shift - b).abs() < 1e-7 * (1.0 + b.abs()));
            }
            prop_assert!((slope * base.mean + shift - m.mean).abs() < 1e-7 * (1.0 + m.mean.abs()));
        }
    }
}
