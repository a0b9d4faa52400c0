//! Shared plumbing: cohort loading, strategy execution, benchmark outputs.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use fallbench_core::cohort::{parse_cohort_with, select_complete};
use fallbench_core::eval::{
    compare_strategies, emit_report, metrics_with_se_mode, tune_threshold, Aggregation,
    ReportRow, ThresholdChoice, ThresholdObjective,
};
use fallbench_core::pipeline::{make_fold_plan, run_strategy_audited, FoldAudit, DEFAULT_THRESHOLD};
use fallbench_core::synth::{default_cohort_spec, generate_cohort};
use fallbench_core::seed::{derive, label_id};
use fallbench_core::{
    Cohort, CohortSpec, Fallback, PredictionSet, PredictionStrategy, VariableCatalog,
};

use crate::config::{file_stem, BenchmarkConfig, CohortSource, StrategyConfig};
use crate::error::{config, CliError, CliResult};

/// A spec file (or the built-in spec) plus whether it fixed its own seed.
pub fn load_spec(path: Option<&Path>) -> CliResult<(CohortSpec, Option<u64>)> {
    let Some(path) = path else {
        return Ok((default_cohort_spec(), None));
    };
    let text = std::fs::read_to_string(path).map_err(config(path.display()))?;
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(config(path.display()))?;
    let spec = CohortSpec::from_json(&text).map_err(config(path.display()))?;
    let seed = raw.get("seed").map(|_| spec.seed);
    Ok((spec, seed))
}

/// Synthetic cohorts are drawn with the master seed, so `generate --seed s`
/// and a benchmark run with seed `s` see the same patients.
pub fn load_cohort(source: &CohortSource, catalog: &VariableCatalog, seed: u64) -> CliResult<Cohort> {
    match source {
        CohortSource::Csv { path } => {
            let text = std::fs::read_to_string(path).map_err(config(path.display()))?;
            parse_cohort_with(&text, catalog).map_err(config(path.display()))
        }
        CohortSource::Synthetic { spec } => {
            let (mut spec, _) = load_spec(spec.as_deref())?;
            spec.seed = seed;
            Ok(generate_cohort(&spec)?)
        }
    }
}

/// Run `f` on a pool of at most `jobs` threads (rayon's default when `None`).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(config("thread pool"))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone)]
pub struct StrategyRun {
    pub config: StrategyConfig,
    /// Labelled at the final threshold.
    pub predictions: PredictionSet,
    pub audits: Vec<FoldAudit>,
    pub threshold: Option<ThresholdChoice>,
}

impl StrategyRun {
    pub fn population(&self) -> String {
        let n = self.predictions.len();
        match self.config.fallback {
            Fallback::None => format!("Complete cases (n = {n})"),
            Fallback::MajorityOnMissing => format!("All patients, majority fallback (n = {n})"),
        }
    }
}

/// Out-of-fold predictions of one configured strategy.
///
/// Folds are stratified on the complete cases of the strategy's variable
/// set; a fallback strategy extends that plan to the incomplete patients,
/// so its complete-case predictions coincide with the complete-case
/// strategy's.
pub fn run_configured(
    sc: &StrategyConfig,
    cohort: &Cohort,
    catalog: &VariableCatalog,
    folds: usize,
    seed: u64,
) -> CliResult<StrategyRun> {
    let vs = catalog.set(&sc.variable_set).map_err(config(format!("strategy {}", sc.label)))?;
    vs.validate_for(cohort).map_err(config(format!("strategy {}", sc.label)))?;
    let mut strategy = PredictionStrategy::new(&sc.label, sc.model_spec().with_seed(seed), vs.clone())
        .with_fallback(sc.fallback)
        .with_threshold(sc.threshold.unwrap_or(DEFAULT_THRESHOLD));
    if let Some(g) = sc.tuning_grid() {
        strategy = strategy.with_grid(g);
    }
    let complete = select_complete(cohort, &vs)?;
    let plan = make_fold_plan(&complete, folds, seed)?;
    let (population, plan) = match sc.fallback {
        Fallback::None => (complete, plan),
        Fallback::MajorityOnMissing => {
            let extended = plan.extend_to(cohort, derive(seed, &[label_id("fallback")]))?;
            (cohort.clone(), extended)
        }
    };
    let (mut predictions, audits) = run_strategy_audited(&strategy, &population, &plan)?;
    let threshold = match sc.threshold_objective {
        Some(objective) => {
            let choice = tune_threshold(&predictions, objective)?;
            predictions = predictions.with_threshold(choice.threshold)?;
            Some(choice)
        }
        None => None,
    };
    Ok(StrategyRun { config: sc.clone(), predictions, audits, threshold })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOutput {
    pub report: String,
    pub comparisons: String,
    pub audit: String,
    /// (file name, CSV text), in strategy order.
    pub predictions: Vec<(String, String)>,
}

impl BenchmarkOutput {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.tsv"), &self.report)?;
        std::fs::write(dir.join("comparisons.tsv"), &self.comparisons)?;
        std::fs::write(dir.join("audit.log"), &self.audit)?;
        for (name, csv) in &self.predictions {
            std::fs::write(dir.join(name), csv)?;
        }
        Ok(())
    }
}

fn describe_objective(o: ThresholdObjective) -> String {
    match o {
        ThresholdObjective::MinSpecificity(t) => format!("min_specificity {t}"),
        ThresholdObjective::MaxAccuracy => "max_accuracy".into(),
    }
}

fn format_p(p: f64) -> String {
    if p < 1e-3 {
        format!("{p:.3e}")
    } else {
        format!("{p:.4}")
    }
}

/// Run every configured strategy and render the output files.
pub fn benchmark(cfg: &BenchmarkConfig, seed: u64, aggregation: Aggregation) -> CliResult<BenchmarkOutput> {
    let catalog = cfg.load_catalog()?;
    cfg.validate(&catalog)?;
    let metrics = cfg.comparison_metrics()?;
    let cohort = load_cohort(&cfg.cohort, &catalog, seed)?;

    let runs: Vec<StrategyRun> = cfg
        .strategies
        .par_iter()
        .map(|s| run_configured(s, &cohort, &catalog, cfg.folds, seed))
        .collect::<CliResult<_>>()?;

    let mut rows = Vec::with_capacity(runs.len());
    let mut audit = String::new();
    let _ = writeln!(
        audit,
        "seed={seed} folds={} patients={} fallers={} aggregation={aggregation:?}",
        cfg.folds,
        cohort.len(),
        cohort.n_fallers()
    );
    for run in &runs {
        let sc = &run.config;
        rows.push(ReportRow {
            label: sc.label.clone(),
            variables: sc.variable_set.clone(),
            population: run.population(),
            method: sc.family.display_name().to_string(),
            report: metrics_with_se_mode(&run.predictions, aggregation)?,
        });
        let _ = writeln!(
            audit,
            "[{}] family={:?} variable_set={} fallback={:?} population={}",
            sc.label,
            sc.family,
            sc.variable_set,
            sc.fallback,
            run.predictions.len()
        );
        for a in &run.audits {
            let _ = writeln!(audit, "  {a}");
        }
        match (&run.threshold, sc.threshold_objective) {
            (Some(c), Some(o)) => {
                let _ = writeln!(
                    audit,
                    "  threshold={} objective={} sensitivity={:.6} specificity={:.6}{}",
                    c.threshold,
                    describe_objective(o),
                    c.sensitivity,
                    c.specificity,
                    if c.degenerate { " DEGENERATE" } else { "" }
                );
            }
            _ => {
                let _ = writeln!(audit, "  threshold={} (fixed)", run.predictions.threshold);
            }
        }
    }

    let mut comparisons = String::from("Pair\tMetric\tStatistic\tPairs\tWilcoxon p\n");
    for (a, b) in &cfg.comparisons {
        let pa = &runs.iter().find(|r| &r.config.label == a).expect("validated").predictions;
        let pb = &runs.iter().find(|r| &r.config.label == b).expect("validated").predictions;
        for &m in &metrics {
            let (stat, n, p) = match compare_strategies(pa, pb, m) {
                Ok(t) => (format!("{}", t.statistic), t.n.to_string(), format_p(t.p_value)),
                Err(fallbench_core::Error::InvalidInput(msg)) if msg.contains("undefined") => {
                    ("-".into(), "0".into(), "-".into())
                }
                Err(e) => return Err(e.into()),
            };
            let _ = writeln!(comparisons, "{a} vs {b}\t{m}\t{stat}\t{n}\t{p}");
        }
    }

    let predictions = runs
        .iter()
        .map(|r| (format!("{}.predictions.csv", file_stem(&r.config.label)), r.predictions.to_csv()))
        .collect();
    Ok(BenchmarkOutput { report: emit_report(&rows), comparisons, audit, predictions })
}
