use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fallbench_bench::{trail_cohort, trail_problem};
use fallbench_core::learners::fit;
use fallbench_core::pipeline::{make_fold_plan, run_strategy};
use fallbench_core::{Family, ModelSpec, Normalizer, PredictionStrategy, VariableCatalog};

fn fit_each_family(c: &mut Criterion) {
    let (x, y) = trail_problem(7);
    let x = Normalizer::fit(&x).apply(&x);
    let mut group = c.benchmark_group("fit/trail");
    group.sample_size(10);
    for family in Family::ALL {
        let spec = ModelSpec::new(family).with_seed(1);
        group.bench_with_input(BenchmarkId::from_parameter(family.display_name()), &spec, |b, s| {
            b.iter(|| fit(s, &x, &y).unwrap())
        });
    }
    group.finish();
}

fn ten_fold_strategy(c: &mut Criterion) {
    let cohort = trail_cohort(7);
    let set = VariableCatalog::default().set("Trail").unwrap();
    let plan = make_fold_plan(&cohort, 10, 3).unwrap();
    let mut group = c.benchmark_group("cv/trail");
    group.sample_size(10);
    for family in [Family::LogisticRegression, Family::RandomForest] {
        let strategy = PredictionStrategy::new("s", ModelSpec::new(family).with_seed(1), set.clone());
        group.bench_function(family.display_name(), |b| {
            b.iter(|| run_strategy(&strategy, &cohort, &plan).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, fit_each_family, ten_fold_strategy);
criterion_main!(benches);
