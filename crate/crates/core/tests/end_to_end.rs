use fallbench_core::cohort::{parse_cohort, select_complete};
use fallbench_core::eval::{compare_strategies, metrics_with_se, roc};
use fallbench_core::pipeline::{make_fold_plan, run_strategy};
use fallbench_core::synth::{default_cohort_spec, generate_cohort};
use fallbench_core::{Family, Fallback, Metric, ModelSpec, PredictionStrategy, VariableCatalog};

#[test]
fn trail_strategies_from_synthetic_cohort() {
    let mut spec = default_cohort_spec();
    spec.seed = 21;
    let cohort = generate_cohort(&spec).unwrap();
    // CSV round trip keeps every record
    let cohort = parse_cohort(&cohort.to_csv()).unwrap();
    assert_eq!((cohort.len(), cohort.n_fallers()), (338, 54));

    let trail = VariableCatalog::default().set("Trail").unwrap();
    let complete = select_complete(&cohort, &trail).unwrap();
    let plan = make_fold_plan(&complete, 10, 21).unwrap();

    let lr = PredictionStrategy::new("lr", ModelSpec::new(Family::LogisticRegression), trail.clone());
    let maj = PredictionStrategy::new("maj", ModelSpec::new(Family::Majority), trail.clone());
    let a = run_strategy(&lr, &complete, &plan).unwrap();
    let b = run_strategy(&maj, &complete, &plan).unwrap();
    assert_eq!(a.len(), complete.len());
    assert_eq!(a.n_folds(), 10);

    let ra = metrics_with_se(&a).unwrap();
    let rb = metrics_with_se(&b).unwrap();
    assert_eq!(rb.sensitivity.value, Some(0.0));
    assert!(ra.sensitivity.value.unwrap() > 0.0);
    assert!(roc(&a).unwrap().auroc > 0.7);
    let t = compare_strategies(&a, &b, Metric::Sensitivity).unwrap();
    assert!(t.p_value < 0.05);

    // the fallback plan covers everyone and keeps complete-case predictions
    let wide = plan.extend_to(&cohort, 99).unwrap();
    let fb = run_strategy(&lr.clone().with_fallback(Fallback::MajorityOnMissing), &cohort, &wide).unwrap();
    assert_eq!(fb.len(), cohort.len());
    for p in fb.entries.iter().filter(|p| !p.fallback_used) {
        let q = a.entries.iter().find(|q| q.id == p.id).unwrap();
        assert_eq!((p.fold, p.score), (q.fold, q.score));
    }
    assert!(fb.entries.iter().filter(|p| p.fallback_used).all(|p| !p.predicted));
}
