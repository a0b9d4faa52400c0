use std::fmt::Write as _;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::pipeline::PredictionSet;
use crate::seed;
use crate::stats::quantile_sorted;

/// The TPR grid for bands is `0, 1/STEPS, …, 1`.
pub const TPR_GRID_STEPS: usize = 20;
const MAX_REDRAWS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    /// Patients with `score > threshold` are called fallers; the last point
    /// uses −∞.
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
    /// Bootstrap FPR band `(lo, hi)`, when this point carries one.
    pub band: Option<(f64, f64)>,
}

/// Bootstrap FPR percentiles at one TPR grid value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBand {
    pub tpr: f64,
    /// FPR of the observed curve at this TPR.
    pub fpr: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auroc: f64,
    pub grid_bands: Option<Vec<GridBand>>,
}

/// (tpr, fpr) staircase over descending unique scores plus a −∞ sentinel.
fn curve(scored: &[(f64, bool)]) -> Result<Vec<(f64, f64, f64)>> {
    let pos = scored.iter().filter(|s| s.1).count();
    let neg = scored.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass("ROC needs fallers and non-fallers".into()));
    }
    let mut sorted = scored.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].0;
        // threshold t: strictly greater scores are positive
        points.push((t, tp as f64 / pos as f64, fp as f64 / neg as f64));
        while i < sorted.len() && sorted[i].0 == t {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
    }
    points.push((f64::NEG_INFINITY, 1.0, 1.0));
    Ok(points)
}

fn trapezoid(points: &[(f64, f64, f64)]) -> f64 {
    points.windows(2).map(|w| (w[1].2 - w[0].2) * (w[1].1 + w[0].1) / 2.0).sum()
}

fn scored(preds: &PredictionSet) -> Result<Vec<(f64, bool)>> {
    if preds.entries.iter().any(|e| !e.score.is_finite()) {
        return Err(invalid("prediction set has non-finite scores"));
    }
    Ok(preds.entries.iter().map(|e| (e.score, e.truth)).collect())
}

/// Cross-validated ROC curve of the pooled out-of-fold scores.
pub fn roc(preds: &PredictionSet) -> Result<RocCurve> {
    let pts = curve(&scored(preds)?)?;
    Ok(RocCurve {
        auroc: trapezoid(&pts),
        points: pts
            .into_iter()
            .map(|(threshold, tpr, fpr)| RocPoint { threshold, tpr, fpr, band: None })
            .collect(),
        grid_bands: None,
    })
}

/// Index of the first point whose TPR reaches `g`.
fn first_reaching(points: &[(f64, f64, f64)], g: f64) -> usize {
    points.iter().position(|p| p.1 >= g - 1e-12).unwrap_or(points.len() - 1)
}

fn grid() -> impl Iterator<Item = f64> {
    (0..=TPR_GRID_STEPS).map(|i| i as f64 / TPR_GRID_STEPS as f64)
}

/// ROC curve with percentile-bootstrap FPR bands.
///
/// Patients are resampled with replacement `b` times. At each TPR grid value
/// the resampled curve's FPR is read at its first point reaching that TPR;
/// the `alpha/2` and `1 − alpha/2` percentiles form the band, which is
/// attached to the observed curve point defining the grid value's FPR.
pub fn roc_bands(preds: &PredictionSet, b: usize, alpha: f64, seed_: u64) -> Result<RocCurve> {
    if b < 100 {
        return Err(invalid("ROC bands need at least 100 bootstrap replicates"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let data = scored(preds)?;
    let observed = curve(&data)?;
    let n = data.len();
    let g: Vec<f64> = grid().collect();
    let mut fprs: Vec<Vec<f64>> = vec![Vec::with_capacity(b); g.len()];
    let mut sample = Vec::with_capacity(n);
    for rep in 0..b as u64 {
        let mut pts = None;
        for attempt in 0..MAX_REDRAWS {
            let mut rng = seed::rng(seed::derive(seed_, &[rep, attempt]));
            sample.clear();
            sample.extend((0..n).map(|_| data[rng.random_range(0..n)]));
            if let Ok(p) = curve(&sample) {
                pts = Some(p);
                break;
            }
        }
        let pts = pts.ok_or_else(|| {
            Error::SingleClass(format!("bootstrap replicate {rep} kept drawing one class"))
        })?;
        for (slot, &gv) in fprs.iter_mut().zip(&g) {
            slot.push(pts[first_reaching(&pts, gv)].2);
        }
    }
    let mut out = roc(preds)?;
    let mut bands = Vec::with_capacity(g.len());
    for (mut v, &gv) in fprs.into_iter().zip(&g) {
        v.sort_by(f64::total_cmp);
        let at = first_reaching(&observed, gv);
        let fpr = observed[at].2;
        let lo = quantile_sorted(&v, alpha / 2.0);
        let hi = quantile_sorted(&v, 1.0 - alpha / 2.0);
        bands.push(GridBand { tpr: gv, fpr, lo, hi });
        let point = &mut out.points[at];
        let (plo, phi) = point.band.unwrap_or((fpr, fpr));
        point.band = Some((plo.min(lo), phi.max(hi)));
    }
    out.grid_bands = Some(bands);
    Ok(out)
}

impl RocCurve {
    /// `threshold,tpr,fpr,fpr_lo,fpr_hi`; band cells are empty where absent.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,tpr,fpr,fpr_lo,fpr_hi\n");
        for p in &self.points {
            let t = if p.threshold == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                p.threshold.to_string()
            };
            let (lo, hi) =
                p.band.map_or((String::new(), String::new()), |(l, h)| (l.to_string(), h.to_string()));
            let _ = writeln!(out, "{t},{},{},{lo},{hi}", p.tpr, p.fpr);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Prediction;

    pub(crate) fn preds(pos: &[f64], neg: &[f64]) -> PredictionSet {
        let entries = pos
            .iter()
            .map(|&s| (s, true))
            .chain(neg.iter().map(|&s| (s, false)))
            .enumerate()
            .map(|(i, (score, truth))| Prediction {
                id: format!("p{i}"),
                fold: i % 2,
                truth,
                score,
                predicted: score > 0.5,
                fallback_used: false,
            })
            .collect();
        PredictionSet { threshold: 0.5, entries }
    }

    fn concordance(pos: &[f64], neg: &[f64]) -> f64 {
        let mut c = 0.0;
        for p in pos {
            for q in neg {
                c += if p > q { 1.0 } else if p == q { 0.5 } else { 0.0 };
            }
        }
        c / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn small_examples() {
        assert_eq!(roc(&preds(&[0.9, 0.7], &[0.8, 0.6])).unwrap().auroc, 0.75);
        assert_eq!(roc(&preds(&[0.9, 0.8], &[0.2, 0.1])).unwrap().auroc, 1.0);
        let flat = roc(&preds(&[0.4, 0.4], &[0.4])).unwrap();
        assert_eq!(flat.points.len(), 2);
        assert_eq!(flat.auroc, 0.5);
        assert!(roc(&preds(&[0.4], &[])).is_err());
    }

    #[test]
    fn curve_shape_invariants() {
        use rand::Rng;
        let mut rng = seed::rng(4);
        let pos: Vec<f64> = (0..40).map(|_| (rng.random_range(0..10) as f64) / 10.0).collect();
        let neg: Vec<f64> = (0..60).map(|_| (rng.random_range(0..8) as f64) / 10.0).collect();
        let c = roc(&preds(&pos, &neg)).unwrap();
        let first = c.points.first().unwrap();
        let last = c.points.last().unwrap();
        assert_eq!((first.tpr, first.fpr), (0.0, 0.0));
        assert_eq!((last.tpr, last.fpr), (1.0, 1.0));
        for w in c.points.windows(2) {
            assert!(w[0].threshold > w[1].threshold);
            assert!(w[0].tpr <= w[1].tpr && w[0].fpr <= w[1].fpr);
        }
        assert!((c.auroc - concordance(&pos, &neg)).abs() < 1e-10);
        // strictly monotone transformation leaves AUROC unchanged
        let tp: Vec<f64> = pos.iter().map(|s| s * s * 0.5 + 0.1).collect();
        let tn: Vec<f64> = neg.iter().map(|s| s * s * 0.5 + 0.1).collect();
        assert!((roc(&preds(&tp, &tn)).unwrap().auroc - c.auroc).abs() < 1e-12);
    }

    #[test]
    fn separating_scores_give_collapsed_bands() {
        let p = preds(&[0.9, 0.8, 0.75, 0.7], &[0.3, 0.2, 0.1]);
        let c = roc_bands(&p, 200, 0.05, 1).unwrap();
        for pt in &c.points {
            if let Some((lo, hi)) = pt.band {
                assert_eq!((lo, hi), (pt.fpr, pt.fpr));
            }
        }
        assert!(c.points.iter().any(|p| p.band.is_some()));
        assert_eq!(c, roc_bands(&p, 200, 0.05, 1).unwrap());
    }

    #[test]
    fn bands_contain_the_observed_curve() {
        use rand::Rng;
        let mut rng = seed::rng(7);
        let pos: Vec<f64> = (0..50).map(|_| rng.random_range(0.2..1.0)).collect();
        let neg: Vec<f64> = (0..50).map(|_| rng.random_range(0.0..0.8)).collect();
        let c = roc_bands(&preds(&pos, &neg), 300, 0.05, 3).unwrap();
        for p in &c.points {
            if let Some((lo, hi)) = p.band {
                assert!(lo <= p.fpr && p.fpr <= hi);
            }
        }
        assert_eq!(c.grid_bands.as_ref().unwrap().len(), TPR_GRID_STEPS + 1);
        assert!(c.to_csv().lines().last().unwrap().starts_with("-inf,1,1"));
    }
}
