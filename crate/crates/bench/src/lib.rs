//! Shared fixtures for the benchmarks.

use fallbench_core::cohort::select_complete;
use fallbench_core::pipeline::Prediction;
use fallbench_core::synth::{default_cohort_spec, generate_cohort};
use fallbench_core::{Cohort, Matrix, PredictionSet, VariableCatalog};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Synthetic cohort restricted to its Trail-complete patients.
pub fn trail_cohort(seed: u64) -> Cohort {
    let mut spec = default_cohort_spec();
    spec.seed = seed;
    let cohort = generate_cohort(&spec).expect("default spec generates");
    let set = VariableCatalog::default().set("Trail").expect("Trail exists");
    select_complete(&cohort, &set).expect("complete cases")
}

/// Design matrix and labels of the Trail variables, ready for a learner.
pub fn trail_problem(seed: u64) -> (Matrix, Vec<bool>) {
    let cohort = trail_cohort(seed);
    let set = VariableCatalog::default().set("Trail").unwrap();
    let idx: Vec<usize> = (0..cohort.len()).collect();
    (cohort.matrix(&set, &idx).unwrap(), cohort.labels())
}

/// Out-of-fold style predictions with shifted uniform scores over `k` folds.
pub fn prediction_set(n_pos: usize, n_neg: usize, k: usize, seed: u64) -> PredictionSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = (0..n_pos + n_neg)
        .map(|i| {
            let truth = i < n_pos;
            let shift = if truth { 0.3 } else { 0.0 };
            let score: f64 = (rng.random::<f64>() * 0.7 + shift).min(1.0);
            Prediction {
                id: format!("P{i:05}"),
                fold: i % k,
                truth,
                score,
                predicted: score >= 0.5,
                fallback_used: false,
            }
        })
        .collect();
    PredictionSet { threshold: 0.5, entries }
}
