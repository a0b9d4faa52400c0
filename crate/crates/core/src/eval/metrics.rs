use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pipeline::{Prediction, PredictionSet};
use crate::stats::jackknife_variance;

/// Counts with faller as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    fn add(&mut self, truth: bool, predicted: bool, delta: i64) {
        let slot = match (truth, predicted) {
            (true, true) => &mut self.tp,
            (false, true) => &mut self.fp,
            (true, false) => &mut self.fn_,
            (false, false) => &mut self.tn,
        };
        *slot = slot.checked_add_signed(delta).expect("confusion count underflow");
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = &'a Prediction>) -> Self {
        let mut cm = Self::default();
        for p in pairs {
            cm.add(p.truth, p.predicted, 1);
        }
        cm
    }

    /// The matrix with one patient removed.
    pub fn without(&self, p: &Prediction) -> Self {
        let mut cm = *self;
        cm.add(p.truth, p.predicted, -1);
        cm
    }
}

pub fn confusion(preds: &PredictionSet) -> ConfusionMatrix {
    ConfusionMatrix::from_pairs(&preds.entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mmce,
    Sensitivity,
    Specificity,
    Precision,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 5] =
        [Metric::Mmce, Metric::Sensitivity, Metric::Specificity, Metric::Precision, Metric::F1];

    /// Value on a confusion matrix; `None` when the denominator is zero.
    pub fn value(self, cm: &ConfusionMatrix) -> Option<f64> {
        let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        match self {
            Metric::Mmce => ratio(cm.fp + cm.fn_, cm.total()),
            Metric::Sensitivity => ratio(cm.tp, cm.tp + cm.fn_),
            Metric::Specificity => ratio(cm.tn, cm.tn + cm.fp),
            Metric::Precision => ratio(cm.tp, cm.tp + cm.fp),
            Metric::F1 => ratio(2 * cm.tp, 2 * cm.tp + cm.fn_ + cm.fp),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mmce => "mmce",
            Metric::Sensitivity => "sensitivity",
            Metric::Specificity => "specificity",
            Metric::Precision => "precision",
            Metric::F1 => "f1",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricValue {
    pub value: Option<f64>,
    pub se: Option<f64>,
    /// Some folds or leave-one-out subsamples had the metric undefined and
    /// were skipped.
    pub partial: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricReport {
    pub mmce: MetricValue,
    pub sensitivity: MetricValue,
    pub specificity: MetricValue,
    pub precision: MetricValue,
    pub f1: MetricValue,
}

impl MetricReport {
    pub fn get(&self, m: Metric) -> &MetricValue {
        match m {
            Metric::Mmce => &self.mmce,
            Metric::Sensitivity => &self.sensitivity,
            Metric::Specificity => &self.specificity,
            Metric::Precision => &self.precision,
            Metric::F1 => &self.f1,
        }
    }

    fn get_mut(&mut self, m: Metric) -> &mut MetricValue {
        match m {
            Metric::Mmce => &mut self.mmce,
            Metric::Sensitivity => &mut self.sensitivity,
            Metric::Specificity => &mut self.specificity,
            Metric::Precision => &mut self.precision,
            Metric::F1 => &mut self.f1,
        }
    }
}

/// Point values of every metric (no standard errors).
pub fn metrics(cm: &ConfusionMatrix) -> MetricReport {
    let mut r = MetricReport::default();
    for m in Metric::ALL {
        r.get_mut(m).value = m.value(cm);
    }
    r
}

/// How fold results are combined into one reported value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Unweighted mean of fold-level metrics, with per-fold jackknife.
    #[default]
    FoldMean,
    /// Metric of the pooled counts, with a jackknife over all patients.
    Pooled,
}

pub fn metrics_with_se(preds: &PredictionSet) -> Result<MetricReport> {
    metrics_with_se_mode(preds, Aggregation::FoldMean)
}

/// Metric values with jackknife standard errors.
///
/// In fold-mean mode each fold contributes its leave-one-out pseudosamples;
/// the within-fold jackknife variances are summed and scaled to the
/// variance of the mean of `K` fold values: `se = sqrt(Σ_f var_f) / K`.
pub fn metrics_with_se_mode(preds: &PredictionSet, mode: Aggregation) -> Result<MetricReport> {
    if preds.is_empty() {
        return Err(Error::EmptyPopulation("prediction set is empty".into()));
    }
    let folds = preds.by_fold();
    if mode == Aggregation::FoldMean {
        if let Some(f) = folds.iter().position(|f| f.len() < 2) {
            return Err(invalid(format!(
                "fold {f} has fewer than two patients; the jackknife needs two"
            )));
        }
    }
    let mut report = MetricReport::default();
    for m in Metric::ALL {
        *report.get_mut(m) = match mode {
            Aggregation::FoldMean => fold_mean(&folds, m),
            Aggregation::Pooled => pooled(&preds.entries, m),
        };
    }
    Ok(report)
}

/// Leave-one-out values of `m` within one group of predictions.
pub(crate) fn pseudo_values(group: &[&Prediction], m: Metric) -> Vec<Option<f64>> {
    let cm = ConfusionMatrix::from_pairs(group.iter().copied());
    group.iter().map(|p| m.value(&cm.without(p))).collect()
}

fn fold_mean(folds: &[Vec<&Prediction>], m: Metric) -> MetricValue {
    let mut values = Vec::new();
    let mut var_sum = 0.0;
    let mut partial = false;
    for fold in folds.iter().filter(|f| !f.is_empty()) {
        let cm = ConfusionMatrix::from_pairs(fold.iter().copied());
        let Some(v) = m.value(&cm) else {
            partial = true;
            continue;
        };
        values.push(v);
        let pseudo = pseudo_values(fold, m);
        let defined: Vec<f64> = pseudo.iter().flatten().copied().collect();
        partial |= defined.len() < pseudo.len();
        var_sum += jackknife_variance(&defined);
    }
    if values.is_empty() {
        return MetricValue { value: None, se: None, partial: false };
    }
    let k = values.len() as f64;
    MetricValue {
        value: Some(values.iter().sum::<f64>() / k),
        se: Some(var_sum.sqrt() / k),
        partial,
    }
}

fn pooled(entries: &[Prediction], m: Metric) -> MetricValue {
    let all: Vec<&Prediction> = entries.iter().collect();
    let cm = ConfusionMatrix::from_pairs(all.iter().copied());
    let Some(v) = m.value(&cm) else {
        return MetricValue::default();
    };
    let pseudo = pseudo_values(&all, m);
    let defined: Vec<f64> = pseudo.iter().flatten().copied().collect();
    MetricValue {
        value: Some(v),
        se: (defined.len() >= 2).then(|| jackknife_variance(&defined).sqrt()),
        partial: defined.len() < pseudo.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn set(rows: &[(usize, bool, bool)]) -> PredictionSet {
        PredictionSet {
            threshold: 0.5,
            entries: rows
                .iter()
                .enumerate()
                .map(|(i, &(fold, truth, predicted))| Prediction {
                    id: format!("p{i}"),
                    fold,
                    truth,
                    score: f64::from(u8::from(predicted)),
                    predicted,
                    fallback_used: false,
                })
                .collect(),
        }
    }

    #[test]
    fn hand_built_counts_and_formulas() {
        // tp=2, fp=1, fn=1, tn=6
        let mut rows = vec![(0, true, true), (0, true, true), (0, false, true), (0, true, false)];
        rows.extend(std::iter::repeat_n((0, false, false), 6));
        let cm = confusion(&set(&rows));
        assert_eq!(cm, ConfusionMatrix { tp: 2, fp: 1, fn_: 1, tn: 6 });
        let r = metrics(&cm);
        let close = |a: Option<f64>, b: f64| (a.unwrap() - b).abs() < 1e-12;
        assert!(close(r.mmce.value, 0.2));
        assert!(close(r.sensitivity.value, 2.0 / 3.0));
        assert!(close(r.specificity.value, 6.0 / 7.0));
        assert!(close(r.precision.value, 2.0 / 3.0));
        assert!(close(r.f1.value, 2.0 / 3.0));
    }

    #[test]
    fn majority_on_default_sized_cohort() {
        let mut rows = vec![(0, true, false); 54];
        rows.extend(vec![(0, false, false); 284]);
        let r = metrics(&confusion(&set(&rows)));
        assert!((r.mmce.value.unwrap() - 54.0 / 338.0).abs() < 1e-15);
        assert_eq!(r.sensitivity.value, Some(0.0));
        assert_eq!(r.specificity.value, Some(1.0));
        assert_eq!(r.precision.value, None);
        assert_eq!(r.f1.value, Some(0.0));
    }

    #[test]
    fn one_error_per_fold_has_closed_form_se() {
        // K folds of m patients, exactly one wrong in each: every fold MMCE is
        // 1/m; leave-one-out values are 0 (once) and 1/(m-1) (m-1 times).
        let (k, m) = (5usize, 8usize);
        let mut rows = Vec::new();
        for f in 0..k {
            rows.push((f, true, false));
            rows.extend(std::iter::repeat_n((f, false, false), m - 1));
        }
        let r = metrics_with_se(&set(&rows)).unwrap();
        assert!((r.mmce.value.unwrap() - 1.0 / m as f64).abs() < 1e-12);
        let mf = m as f64;
        let loo: Vec<f64> =
            std::iter::once(0.0).chain(std::iter::repeat_n(1.0 / (mf - 1.0), m - 1)).collect();
        let mean = loo.iter().sum::<f64>() / mf;
        let var_f = (mf - 1.0) / mf * loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        let expect = (k as f64 * var_f).sqrt() / k as f64;
        assert!((r.mmce.se.unwrap() - expect).abs() < 1e-12);
        assert!((expect - 1.0 / (mf * (k as f64).sqrt())).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions_have_zero_se() {
        let rows: Vec<_> = (0..20).map(|i| (i % 4, i % 3 == 0, i % 3 == 0)).collect();
        let r = metrics_with_se(&set(&rows)).unwrap();
        for m in Metric::ALL {
            assert_eq!(r.get(m).se, Some(0.0), "{m}");
        }
    }

    #[test]
    fn undefined_precision_is_flagged_partial() {
        // fold 0: one predicted positive, so deleting it leaves precision undefined
        let rows = vec![
            (0, true, true),
            (0, false, false),
            (0, true, false),
            (1, false, true),
            (1, true, true),
            (1, false, false),
        ];
        let r = metrics_with_se(&set(&rows)).unwrap();
        assert!(r.precision.partial);
        assert!(!r.mmce.partial);
        let all_negative: Vec<_> = rows.iter().map(|&(f, t, _)| (f, t, false)).collect();
        let r = metrics_with_se(&set(&all_negative)).unwrap();
        assert_eq!(r.precision.value, None);
    }

    #[test]
    fn pooled_mode_matches_proportion_formula() {
        let rows: Vec<_> = (0..50).map(|i| (i % 5, i < 8, false)).collect();
        let r = metrics_with_se_mode(&set(&rows), Aggregation::Pooled).unwrap();
        let p: f64 = 8.0 / 50.0;
        assert!((r.mmce.value.unwrap() - p).abs() < 1e-15);
        assert!((r.mmce.se.unwrap() - (p * (1.0 - p) / 49.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn metric_identities() {
        use rand::Rng;
        let mut rng = crate::seed::rng(1);
        for _ in 0..200 {
            let cm = ConfusionMatrix {
                tp: rng.random_range(0..20),
                fp: rng.random_range(0..20),
                fn_: rng.random_range(0..20),
                tn: rng.random_range(1..20),
            };
            let r = metrics(&cm);
            let acc = (cm.tp + cm.tn) as f64 / cm.total() as f64;
            assert!((r.mmce.value.unwrap() - (1.0 - acc)).abs() < 1e-12);
            if let (Some(s), Some(p)) = (r.sensitivity.value, r.precision.value) {
                if s + p > 0.0 {
                    assert!((r.f1.value.unwrap() - 2.0 * s * p / (s + p)).abs() < 1e-12);
                }
                let count = s * (cm.tp + cm.fn_) as f64;
                assert!((count - count.round()).abs() < 1e-9);
            }
        }
    }
}
