use super::metrics::{pseudo_values, Metric};
use crate::error::{invalid, Result};
use crate::pipeline::PredictionSet;
use crate::stats::{wilcoxon_signed_rank, TestResult};

/// Leave-one-out metric values of two strategies, paired by (fold, deleted
/// patient). Pairs where either value is undefined are dropped.
pub fn paired_pseudosamples(
    a: &PredictionSet,
    b: &PredictionSet,
    metric: Metric,
) -> Result<Vec<(f64, f64)>> {
    if a.len() != b.len() {
        return Err(invalid(format!(
            "strategies were evaluated on different populations ({} vs {} patients)",
            a.len(),
            b.len()
        )));
    }
    for (x, y) in a.entries.iter().zip(&b.entries) {
        if x.id != y.id || x.fold != y.fold || x.truth != y.truth {
            return Err(invalid(format!(
                "patient {} / {} is not paired: predictions must share population and fold plan",
                x.id, y.id
            )));
        }
    }
    let (fa, fb) = (a.by_fold(), b.by_fold());
    let mut pairs = Vec::with_capacity(a.len());
    for (ga, gb) in fa.iter().zip(&fb) {
        for (pa, pb) in pseudo_values(ga, metric).into_iter().zip(pseudo_values(gb, metric)) {
            if let (Some(x), Some(y)) = (pa, pb) {
                pairs.push((x, y));
            }
        }
    }
    Ok(pairs)
}

/// Wilcoxon signed-rank test on the paired jackknife pseudosamples of a
/// metric.
pub fn compare_strategies(
    a: &PredictionSet,
    b: &PredictionSet,
    metric: Metric,
) -> Result<TestResult> {
    let pairs = paired_pseudosamples(a, b, metric)?;
    if pairs.is_empty() {
        return Err(invalid(format!("{metric} is undefined for every pseudosample")));
    }
    wilcoxon_signed_rank(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Prediction;
    use crate::seed;
    use rand::Rng;

    fn set(truth: &[bool], predicted: &[bool], k: usize) -> PredictionSet {
        PredictionSet {
            threshold: 0.5,
            entries: truth
                .iter()
                .zip(predicted)
                .enumerate()
                .map(|(i, (&t, &p))| Prediction {
                    id: format!("p{i}"),
                    fold: i % k,
                    truth: t,
                    score: f64::from(u8::from(p)),
                    predicted: p,
                    fallback_used: false,
                })
                .collect(),
        }
    }

    #[test]
    fn identical_strategies_are_degenerate() {
        let truth: Vec<bool> = (0..30).map(|i| i % 4 == 0).collect();
        let pred: Vec<bool> = (0..30).map(|i| i % 5 == 0).collect();
        let a = set(&truth, &pred, 3);
        let r = compare_strategies(&a, &a, Metric::Mmce).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn uniformly_better_strategy_is_significant() {
        // 30 patients, 3 folds; a is perfect, b misses one patient per fold.
        let truth: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
        let mut wrong = truth.clone();
        for f in 0..3 {
            wrong[f + 3] = !wrong[f + 3];
        }
        let a = set(&truth, &truth, 3);
        let b = set(&truth, &wrong, 3);
        let pairs = paired_pseudosamples(&a, &b, Metric::Mmce).unwrap();
        assert_eq!(pairs.len(), 30);
        assert!(pairs.iter().all(|(x, y)| x < y || (*x == 0.0 && *y == 0.0)));
        let r = compare_strategies(&a, &b, Metric::Mmce).unwrap();
        assert!(r.p_value < 0.001, "{}", r.p_value);
    }

    #[test]
    fn swapping_flips_statistic_only() {
        let mut rng = seed::rng(2);
        let truth: Vec<bool> = (0..40).map(|_| rng.random_bool(0.3)).collect();
        let pa: Vec<bool> = (0..40).map(|_| rng.random_bool(0.3)).collect();
        let pb: Vec<bool> = (0..40).map(|_| rng.random_bool(0.5)).collect();
        let (a, b) = (set(&truth, &pa, 4), set(&truth, &pb, 4));
        let ab = compare_strategies(&a, &b, Metric::Mmce).unwrap();
        let ba = compare_strategies(&b, &a, Metric::Mmce).unwrap();
        assert_eq!(ab.statistic, -ba.statistic);
        assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn mismatched_plans_are_rejected() {
        let truth: Vec<bool> = (0..20).map(|i| i % 2 == 0).collect();
        let a = set(&truth, &truth, 2);
        let b = set(&truth, &truth, 4);
        assert!(compare_strategies(&a, &b, Metric::Mmce).is_err());
    }

    /// Two strategies guessing labels at random on the same plan.
    fn random_label_rejections(reps: u64) -> usize {
        (0..reps)
            .filter(|&r| {
                let mut rng = seed::rng(seed::derive(99, &[r]));
                let truth: Vec<bool> = (0..200).map(|_| rng.random_bool(0.3)).collect();
                let pa: Vec<bool> = (0..200).map(|_| rng.random_bool(0.5)).collect();
                let pb: Vec<bool> = (0..200).map(|_| rng.random_bool(0.5)).collect();
                let p = compare_strategies(&set(&truth, &pa, 10), &set(&truth, &pb, 10), Metric::Mmce)
                    .unwrap()
                    .p_value;
                p <= 0.05
            })
            .count()
    }

    #[test]
    #[ignore = "pseudosamples within a fold are strongly dependent, so the test is anti-conservative; see README"]
    fn random_label_strategies_rarely_differ() {
        let rejected = random_label_rejections(100);
        assert!(rejected <= 10, "{rejected} of 100 repetitions had p <= 0.05");
    }
}
