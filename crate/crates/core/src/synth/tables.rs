//! Published per-class summaries of the in-patient falls cohort.

use std::collections::BTreeMap;

use super::{CohortSpec, PerClass, VariableKind, VariableModel};
use crate::stats::SixNumberSummary;

fn six(v: [f64; 6]) -> SixNumberSummary {
    SixNumberSummary::new(v[0], v[1], v[2], v[3], v[4], v[5]).expect("transcribed summary is ordered")
}

fn continuous(name: &str, group: &str, faller: [f64; 6], non_faller: [f64; 6]) -> VariableModel {
    VariableModel {
        name: name.into(),
        group: group.into(),
        kind: VariableKind::Continuous {
            summary: PerClass { faller: six(faller), non_faller: six(non_faller) },
            integer: false,
        },
    }
}

fn binary(name: &str, group: &str, faller: f64, non_faller: f64) -> VariableModel {
    VariableModel {
        name: name.into(),
        group: group.into(),
        kind: VariableKind::Binary { p_yes: PerClass { faller, non_faller } },
    }
}

/// Six-number summary of a binned distribution, interpolating linearly
/// within bins. `edges` has one more entry than `weights`; weights need not
/// sum to one. The mean is supplied separately (clamped into range).
pub fn histogram_summary(edges: &[f64], weights: &[f64], mean: f64) -> SixNumberSummary {
    assert_eq!(edges.len(), weights.len() + 1);
    let total: f64 = weights.iter().sum();
    let first = weights.iter().position(|w| *w > 0.0).expect("non-empty histogram");
    let last = weights.iter().rposition(|w| *w > 0.0).unwrap();
    let quantile = |p: f64| {
        let target = p * total;
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            if *w > 0.0 && acc + w >= target {
                return edges[i] + (target - acc) / w * (edges[i + 1] - edges[i]);
            }
            acc += w;
        }
        edges[last + 1]
    };
    let (min, max) = (edges[first], edges[last + 1]);
    six([min, quantile(0.25), quantile(0.5), mean.clamp(min, max), quantile(0.75), max])
}

/// Summary of a normal distribution with the given mean and sd: quartiles
/// at ±0.6745 sd, extremes at ±2.5 sd, floored at `lower`.
pub fn normal_summary(mean: f64, sd: f64, lower: f64) -> SixNumberSummary {
    const Q: f64 = 0.674_489_750_196_081_7;
    let f = |z: f64| (mean + z * sd).max(lower);
    six([f(-2.5), f(-Q), mean, mean, f(Q), f(2.5)])
}

/// Standard deviation implied by a 95% interval of the mean.
fn sd_from_ci(lo: f64, hi: f64, n: f64) -> f64 {
    (hi - lo) / 2.0 / 1.959_963_984_540_054 * n.sqrt()
}

const AGE_EDGES: [f64; 10] = [18.0, 19.0, 29.0, 39.0, 49.0, 59.0, 69.0, 79.0, 89.0, 99.0];
const AGE_FALLER: [f64; 9] = [0.0, 11.1, 5.56, 18.5, 25.9, 18.5, 11.1, 9.26, 0.0];
const AGE_NON_FALLER: [f64; 9] = [0.35, 8.45, 15.5, 14.8, 20.4, 17.3, 16.5, 6.34, 0.35];

/// The 338-patient cohort: 54 fallers, per-class summaries of every
/// recorded variable, and per-test availability from the observed sample
/// sizes.
pub fn default_cohort_spec() -> CohortSpec {
    let d = "Demographics";
    let h = "History";
    let t = "Trail";
    let s = "Stroop";
    let m = "Semantic";
    let w = "Walk12";
    let mut variables = vec![
        binary("sex_male", d, 0.463, 0.597),
        continuous_summary(
            "age",
            d,
            histogram_summary(&AGE_EDGES, &AGE_FALLER, 55.4),
            histogram_summary(&AGE_EDGES, &AGE_NON_FALLER, 54.7),
        ),
        continuous_summary(
            "education_years",
            d,
            normal_summary(13.1, sd_from_ci(12.1, 14.1, 54.0), 0.0),
            normal_summary(13.4, sd_from_ci(12.9, 14.0, 284.0), 0.0),
        ),
        binary("ethnicity_white", d, 0.778, 0.774),
        binary("theatre_last_month", h, 31.0 / 54.0, 144.0 / 283.0),
        binary("fallen_last_month", h, 29.0 / 54.0, 80.0 / 283.0),
        binary("function_change_last_month", h, 43.0 / 54.0, 158.0 / 283.0),
        continuous(
            "trail_a_time",
            t,
            [15.0, 49.0, 76.0, 80.43, 90.5, 300.0],
            [14.0, 26.0, 34.0, 42.51, 48.0, 131.0],
        ),
        continuous("trail_a_errors", t, [0.0, 0.0, 0.0, 1.10, 1.0, 3.0], [0.0, 0.0, 0.0, 0.93, 0.0, 2.0]),
        continuous(
            "trail_b_time",
            t,
            [42.0, 176.0, 253.0, 200.71, 294.5, 300.0],
            [32.0, 84.0, 131.0, 121.57, 191.0, 300.0],
        ),
        continuous("trail_b_errors", t, [0.0, 0.3, 2.0, 1.27, 3.0, 8.0], [0.0, 0.0, 0.0, 0.80, 1.0, 7.0]),
        continuous("trail_b_a_ratio", t, [1.0, 2.4, 2.8, 2.79, 4.2, 10.5], [1.6, 2.5, 3.6, 2.97, 4.6, 7.9]),
        continuous(
            "stroop_words_1min",
            s,
            [20.0, 49.0, 66.0, 78.15, 104.0, 112.0],
            [21.0, 93.0, 112.0, 98.23, 112.0, 112.0],
        ),
        continuous(
            "stroop_words_2min",
            s,
            [38.0, 100.0, 112.0, 103.42, 112.0, 112.0],
            [46.0, 112.0, 112.0, 111.27, 112.0, 112.0],
        ),
        continuous("stroop_word_errors", s, [0.0, 0.0, 0.0, 0.85, 1.0, 7.0], [0.0, 0.0, 0.0, 0.99, 1.0, 6.0]),
        continuous(
            "stroop_word_corrections",
            s,
            [0.0, 0.0, 0.0, 0.42, 1.0, 2.0],
            [0.0, 0.0, 0.0, 0.35, 0.0, 4.0],
        ),
        continuous(
            "stroop_colours_1min",
            s,
            [4.0, 26.0, 36.0, 38.00, 51.0, 70.0],
            [20.0, 42.0, 50.0, 47.27, 59.8, 112.0],
        ),
        continuous(
            "stroop_colours_2min",
            s,
            [9.0, 54.0, 72.0, 73.78, 100.0, 112.0],
            [35.0, 82.3, 100.0, 88.84, 112.0, 112.0],
        ),
        continuous(
            "stroop_colour_errors",
            s,
            [0.0, 2.0, 3.0, 3.91, 5.0, 12.0],
            [0.0, 0.0, 1.0, 2.45, 3.0, 10.0],
        ),
        continuous(
            "stroop_colour_corrections",
            s,
            [0.0, 1.0, 2.0, 2.31, 3.0, 7.0],
            [0.0, 0.0, 1.0, 1.70, 2.0, 8.0],
        ),
        continuous(
            "semantic_animals",
            m,
            [5.0, 10.0, 14.0, 15.70, 18.0, 29.0],
            [3.0, 15.0, 19.0, 19.77, 25.0, 38.0],
        ),
        continuous(
            "semantic_repetitions",
            m,
            [0.0, 0.0, 1.0, 0.91, 2.0, 4.0],
            [0.0, 0.0, 0.0, 0.64, 1.0, 3.0],
        ),
    ];
    // (q1, median, mean, q3) per class; every question ranges over 0..5
    let walk: [([f64; 4], [f64; 4]); 12] = [
        ([2.3, 4.0, 3.88, 5.0], [1.0, 3.0, 2.91, 4.0]),
        ([2.0, 5.0, 4.28, 5.0], [1.0, 4.0, 3.34, 5.0]),
        ([2.0, 4.0, 3.81, 5.0], [1.0, 3.0, 2.89, 4.0]),
        ([2.0, 4.0, 3.53, 5.0], [1.0, 3.0, 2.95, 4.0]),
        ([2.0, 3.5, 3.53, 5.0], [1.8, 3.0, 2.87, 4.0]),
        ([3.0, 4.5, 4.19, 5.0], [2.0, 3.0, 3.29, 5.0]),
        ([2.3, 4.5, 4.13, 5.0], [2.0, 3.0, 3.17, 4.0]),
        ([1.0, 4.0, 3.72, 5.0], [1.0, 3.0, 2.83, 5.0]),
        ([1.0, 4.0, 3.91, 5.0], [1.0, 2.0, 2.68, 5.0]),
        ([3.0, 5.0, 4.13, 5.0], [2.0, 3.0, 3.27, 5.0]),
        ([3.0, 4.0, 4.09, 5.0], [1.0, 3.0, 3.14, 5.0]),
        ([4.0, 5.0, 4.44, 5.0], [1.0, 4.0, 3.25, 5.0]),
    ];
    // counts whose quartiles are all whole numbers are drawn as integers
    for v in variables.iter_mut() {
        let count = ["errors", "corrections", "repetitions"].iter().any(|k| v.name.ends_with(k));
        if let VariableKind::Continuous { summary, integer } = &mut v.kind {
            let whole = |s: &SixNumberSummary| s.knots().iter().all(|k| k.fract() == 0.0);
            *integer = count && whole(&summary.faller) && whole(&summary.non_faller);
        }
    }
    for (q, (f, nf)) in walk.iter().enumerate() {
        let full = |v: &[f64; 4]| [0.0, v[0], v[1], v[2], v[3], 5.0];
        variables.push(continuous(&format!("walk12_q{}", q + 1), w, full(f), full(nf)));
    }

    let avail = |f: f64, nf: f64| PerClass { faller: f / 54.0, non_faller: nf / 284.0 };
    let missingness = BTreeMap::from([
        (h.to_string(), avail(54.0, 283.0)),
        (t.to_string(), avail(39.0, 172.0)),
        (s.to_string(), avail(37.0, 180.0)),
        (m.to_string(), avail(44.0, 209.0)),
        (w.to_string(), avail(50.0, 204.0)),
    ]);
    CohortSpec {
        n_total: 338,
        n_fallers: 54,
        variables,
        missingness,
        copula_rho: BTreeMap::new(),
        seed: 0,
    }
}

fn continuous_summary(
    name: &str,
    group: &str,
    faller: SixNumberSummary,
    non_faller: SixNumberSummary,
) -> VariableModel {
    VariableModel {
        name: name.into(),
        group: group.into(),
        kind: VariableKind::Continuous { summary: PerClass { faller, non_faller }, integer: false },
    }
}
