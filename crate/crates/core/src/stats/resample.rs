use rand::Rng as _;

use super::summary::quantile_sorted;
use crate::error::{invalid, Result};
use crate::seed;

/// Leave-one-out evaluation of a statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct Jackknife {
    /// θ₋ᵢ in deletion order; `None` where the statistic is undefined.
    pub pseudo: Vec<Option<f64>>,
    pub se: f64,
    /// Some leave-one-out values were undefined and left out of `se`.
    pub partial: bool,
}

/// Jackknife variance `((n - 1) / n) * Σ (θ₋ᵢ - mean θ₋)²` of a set of
/// leave-one-out values.
pub fn jackknife_variance(pseudo: &[f64]) -> f64 {
    let n = pseudo.len();
    if n < 2 {
        return 0.0;
    }
    let m = pseudo.iter().sum::<f64>() / n as f64;
    let ss: f64 = pseudo.iter().map(|t| (t - m) * (t - m)).sum();
    (n as f64 - 1.0) / n as f64 * ss
}

/// Leave-one-out pseudosamples and standard error of a possibly-undefined
/// statistic.
pub fn jackknife<F>(sample: &[f64], statistic: F) -> Result<Jackknife>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    if sample.len() < 2 {
        return Err(invalid("jackknife needs at least two observations"));
    }
    let mut buf = Vec::with_capacity(sample.len() - 1);
    let pseudo: Vec<Option<f64>> = (0..sample.len())
        .map(|i| {
            buf.clear();
            buf.extend_from_slice(&sample[..i]);
            buf.extend_from_slice(&sample[i + 1..]);
            statistic(&buf)
        })
        .collect();
    let defined: Vec<f64> = pseudo.iter().flatten().copied().collect();
    Ok(Jackknife {
        se: jackknife_variance(&defined).sqrt(),
        partial: defined.len() < pseudo.len(),
        pseudo,
    })
}

pub fn jackknife_se<F>(sample: &[f64], statistic: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    Ok(jackknife(sample, |s| Some(statistic(s)))?.se)
}

pub fn jackknife_pseudosamples<F>(sample: &[f64], statistic: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    Ok(jackknife(sample, |s| Some(statistic(s)))?
        .pseudo
        .into_iter()
        .flatten()
        .collect())
}

/// Percentile bootstrap interval `(lo, hi)` at level `1 - alpha`.
pub fn bootstrap_percentile<F>(
    sample: &[f64],
    statistic: F,
    replicates: usize,
    alpha: f64,
    seed: u64,
) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    if sample.is_empty() {
        return Err(invalid("bootstrap of an empty sample"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if replicates < 100 {
        return Err(invalid("bootstrap needs at least 100 replicates"));
    }
    let n = sample.len();
    let mut buf = vec![0.0; n];
    let mut stats: Vec<f64> = (0..replicates as u64)
        .map(|b| {
            let mut rng = seed::rng(seed::derive(seed, &[b]));
            for slot in buf.iter_mut() {
                *slot = sample[rng.random_range(0..n)];
            }
            statistic(&buf)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    Ok((
        quantile_sorted(&stats, alpha / 2.0),
        quantile_sorted(&stats, 1.0 - alpha / 2.0),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean, sample_variance};
    use rand::Rng;

    #[test]
    fn constant_statistic_has_zero_se() {
        assert_eq!(jackknife_se(&[1.0, 5.0, 2.0], |_| 3.0).unwrap(), 0.0);
    }

    #[test]
    fn mean_se_is_s_over_root_n() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let se = jackknife_se(&xs, mean).unwrap();
        assert!((se - 0.5f64.sqrt()).abs() < 1e-12);
        let mut rng = crate::seed::rng(1);
        for _ in 0..50 {
            let n = rng.random_range(2..40);
            let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0).collect();
            let se = jackknife_se(&xs, mean).unwrap();
            let closed = (sample_variance(&xs) / n as f64).sqrt();
            assert!((se - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn proportion_se_closed_form() {
        let xs = [1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let n = xs.len() as f64;
        let p = mean(&xs);
        let se = jackknife_se(&xs, mean).unwrap();
        assert!((se - (p * (1.0 - p) / (n - 1.0)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pseudosamples_of_mean() {
        let p = jackknife_pseudosamples(&[1.0, 2.0, 3.0], mean).unwrap();
        assert_eq!(p, vec![2.5, 2.0, 1.5]);
        let c = jackknife_pseudosamples(&[4.0; 6], mean).unwrap();
        assert_eq!(c, vec![4.0; 6]);
        assert!(jackknife_pseudosamples(&[1.0], mean).is_err());
    }

    #[test]
    fn undefined_leave_one_out_values_are_flagged() {
        let j = jackknife(&[0.0, 0.0, 1.0], |s| {
            let m = mean(s);
            (m > 0.0).then_some(m)
        })
        .unwrap();
        assert!(j.partial);
        assert_eq!(j.pseudo[2], None);
    }

    #[test]
    fn bootstrap_constant_and_deterministic() {
        let (lo, hi) = bootstrap_percentile(&[2.0; 20], mean, 200, 0.05, 9).unwrap();
        assert_eq!((lo, hi), (2.0, 2.0));
        let xs: Vec<f64> = (0..30).map(|i| (i % 7) as f64).collect();
        let a = bootstrap_percentile(&xs, mean, 500, 0.05, 4).unwrap();
        let b = bootstrap_percentile(&xs, mean, 500, 0.05, 4).unwrap();
        assert_eq!(a, b);
        assert!(bootstrap_percentile(&xs, mean, 50, 0.05, 4).is_err());
        assert!(bootstrap_percentile(&xs, mean, 500, 1.0, 4).is_err());
    }

    #[test]
    fn bootstrap_proportion_near_normal_interval() {
        let xs: Vec<f64> = (0..200).map(|i| (i % 2) as f64).collect();
        let (lo, hi) = bootstrap_percentile(&xs, mean, 2000, 0.05, 11).unwrap();
        let half = 1.96 * (0.25f64 / 200.0).sqrt();
        assert!(((0.5 - lo) / half - 1.0).abs() < 0.15, "lo {lo}");
        assert!(((hi - 0.5) / half - 1.0).abs() < 0.15, "hi {hi}");
    }
}
