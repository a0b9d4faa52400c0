use serde::{Deserialize, Serialize};

use super::metrics::{metrics_with_se, MetricReport};
use crate::error::{invalid, Error, Result};
use crate::pipeline::PredictionSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdObjective {
    /// Highest sensitivity with specificity at least this value.
    MinSpecificity(f64),
    /// Lowest pooled misclassification error.
    MaxAccuracy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdChoice {
    pub threshold: f64,
    /// Pooled over all out-of-fold predictions.
    pub sensitivity: f64,
    pub specificity: f64,
    /// Only a zero-sensitivity threshold met the specificity target.
    pub degenerate: bool,
    /// Fold-mean metrics of the predictions relabelled at `threshold`.
    pub report: MetricReport,
}

/// Pick a decision threshold on pooled out-of-fold scores.
///
/// Candidate thresholds are the distinct scores plus 0. Ties under
/// `MinSpecificity` go to higher specificity, then the lower threshold;
/// under `MaxAccuracy`, to the lower threshold. Fallback patients stay
/// non-fallers at every threshold.
pub fn tune_threshold(preds: &PredictionSet, objective: ThresholdObjective) -> Result<ThresholdChoice> {
    let pos = preds.entries.iter().filter(|e| e.truth).count();
    let neg = preds.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass("threshold tuning needs both classes".into()));
    }
    if let ThresholdObjective::MinSpecificity(t) = objective {
        if !(0.0..=1.0).contains(&t) {
            return Err(invalid(format!("specificity target {t} outside [0, 1]")));
        }
    }
    let mut candidates: Vec<f64> = preds
        .entries
        .iter()
        .filter(|e| !e.fallback_used)
        .map(|e| e.score)
        .chain(std::iter::once(0.0))
        .filter(|s| (0.0..=1.0).contains(s))
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // (threshold, tp, tn)
    let rates = candidates.iter().map(|&t| {
        let (mut tp, mut tn) = (0usize, 0usize);
        for e in &preds.entries {
            let called = !e.fallback_used && e.score > t;
            tp += usize::from(e.truth && called);
            tn += usize::from(!e.truth && !called);
        }
        (t, tp, tn)
    });
    // candidates ascend, so the first of equal keys has the lower threshold
    let best = match objective {
        ThresholdObjective::MinSpecificity(target) => rates
            .filter(|&(_, _, tn)| tn as f64 / neg as f64 >= target - 1e-12)
            .fold(None, |acc: Option<(f64, usize, usize)>, c| match acc {
                Some(b) if (b.1, b.2) >= (c.1, c.2) => Some(b),
                _ => Some(c),
            }),
        ThresholdObjective::MaxAccuracy => rates.fold(None, |acc: Option<(f64, usize, usize)>, c| match acc {
            Some(b) if b.1 + b.2 >= c.1 + c.2 => Some(b),
            _ => Some(c),
        }),
    };
    let (threshold, tp, tn) =
        best.ok_or_else(|| invalid("no threshold reaches the specificity target"))?;
    let report = metrics_with_se(&preds.with_threshold(threshold)?)?;
    Ok(ThresholdChoice {
        threshold,
        sensitivity: tp as f64 / pos as f64,
        specificity: tn as f64 / neg as f64,
        degenerate: matches!(objective, ThresholdObjective::MinSpecificity(_)) && tp == 0,
        report,
    })
}
