//! The five subcommands.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use fallbench_core::cohort::parse_cohort_with;
use fallbench_core::eval::{roc, roc_bands, Aggregation, Metric};
use fallbench_core::pipeline::{PredictionSet, DEFAULT_THRESHOLD};
use fallbench_core::seed::{derive, label_id};
use fallbench_core::stats::{chi_squared_2x2, six_number_summary, welch_t_test};
use fallbench_core::synth::{generate_cohort, mean_residuals};
use fallbench_core::{Cohort, VariableCatalog};

use crate::config::{file_stem, resolve_seed, BenchmarkConfig};
use crate::error::{config, CliError, CliResult};
use crate::runner::{benchmark, load_cohort, load_spec, run_configured, with_jobs};

#[derive(Debug, Parser)]
#[command(name = "fallbench", version, about = "Benchmark falls-prediction strategies under shared cross-validation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic cohort and write it as CSV.
    Generate(GenerateArgs),
    /// Per-class summary tables with significance tests.
    Describe(DescribeArgs),
    /// Run every strategy of a config and write the report files.
    Benchmark(BenchmarkArgs),
    /// ROC curve (optionally with bootstrap bands) for one strategy.
    Roc(RocArgs),
    /// Wilcoxon comparison of two prediction files.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Cohort spec JSON; the built-in spec when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Output CSV (standard output when omitted).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the cohort spec as JSON instead of generating.
    #[arg(long)]
    pub print_spec: bool,
    /// Report published-vs-implied means on standard error.
    #[arg(long)]
    pub residuals: bool,
}

#[derive(Debug, Args)]
pub struct DescribeArgs {
    pub cohort: PathBuf,
    /// Variable catalog JSON (groups and sets).
    #[arg(long)]
    pub catalog: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Pool confusion counts over folds instead of averaging fold metrics.
    #[arg(long)]
    pub pooled_metrics: bool,
    /// Output directory (overrides the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RocArgs {
    #[command(flatten)]
    pub run: RunArgs,
    pub strategy: String,
    /// Bootstrap replicates for FPR bands, e.g. `1000` or `B=1000`.
    #[arg(long, value_parser = parse_bands)]
    pub bands: Option<usize>,
    /// Output CSV (default `<output_dir>/<label>.roc.csv`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Metrics to test (default: all).
    #[arg(long = "metric")]
    pub metrics: Vec<String>,
}

fn parse_bands(s: &str) -> Result<usize, String> {
    let v = s.strip_prefix("B=").or_else(|| s.strip_prefix("b=")).unwrap_or(s);
    v.parse().map_err(|e| format!("{s:?}: {e}"))
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Describe(a) => describe(&a),
        Command::Benchmark(a) => cmd_benchmark(&a),
        Command::Roc(a) => cmd_roc(&a),
        Command::Compare(a) => compare(&a),
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
        }
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn generate(a: &GenerateArgs) -> CliResult<()> {
    let (mut spec, spec_seed) = load_spec(a.spec.as_deref())?;
    spec.seed = resolve_seed(a.seed, spec_seed)?;
    if a.print_spec {
        return write_or_print(a.out.as_deref(), &(spec.to_json() + "\n"));
    }
    if a.residuals {
        let mut err = std::io::stderr().lock();
        writeln!(err, "variable\tclass\tpublished_mean\timplied_mean\tresidual")?;
        for r in mean_residuals(&spec) {
            let class = if r.faller { "faller" } else { "non_faller" };
            writeln!(
                err,
                "{}\t{class}\t{}\t{:.4}\t{:.4}",
                r.variable,
                r.published,
                r.implied,
                r.residual()
            )?;
        }
    }
    let cohort = generate_cohort(&spec)?;
    write_or_print(a.out.as_deref(), &cohort.to_csv())
}

fn format_p(p: f64) -> String {
    if p < 1e-3 {
        format!("{p:.2e}")
    } else {
        format!("{p:.3}")
    }
}

fn fmt_num(x: f64) -> String {
    let s = format!("{x:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Per-class tables: six-number summaries with a Welch t-test p for
/// continuous variables, yes/no counts with a chi-squared p (Yates) for
/// 0/1 variables.
pub fn describe_cohort(cohort: &Cohort) -> String {
    let mut cont = String::from(
        "Group\tVariable\tClass\tN\tMinimum\t1st Qu.\tMedian\tMean\t3rd Qu.\tMaximum\tSignificance\n",
    );
    let mut bin = String::from("Group\tVariable\tClass\tN\tYes\tNo\tSignificance\n");
    for var in cohort.schema() {
        let values = |faller: bool| -> Vec<f64> {
            cohort
                .records()
                .iter()
                .filter(|r| r.outcome.is_faller() == faller)
                .filter_map(|r| r.value(&var.name))
                .collect()
        };
        let (f, nf) = (values(true), values(false));
        let binary = f.iter().chain(&nf).all(|v| *v == 0.0 || *v == 1.0);
        let classes = [("Faller", &f), ("Non-Faller", &nf)];
        if binary {
            let yes = |v: &[f64]| v.iter().filter(|x| **x == 1.0).count() as u64;
            let p = if f.is_empty() || nf.is_empty() {
                "-".to_string()
            } else {
                chi_squared_2x2(yes(&f), f.len() as u64 - yes(&f), yes(&nf), nf.len() as u64 - yes(&nf))
                    .map_or("-".into(), |t| format_p(t.p_value))
            };
            for (i, (name, v)) in classes.iter().enumerate() {
                let sig = if i == 0 { p.as_str() } else { "" };
                let _ = writeln!(
                    bin,
                    "{}\t{}\t{name}\t{}\t{}\t{}\t{sig}",
                    var.group,
                    var.name,
                    v.len(),
                    yes(v),
                    v.len() as u64 - yes(v)
                );
            }
        } else {
            let p = if f.len() < 2 || nf.len() < 2 {
                "-".to_string()
            } else {
                welch_t_test(&f, &nf).map_or("-".into(), |t| format_p(t.p_value))
            };
            for (i, (name, v)) in classes.iter().enumerate() {
                let sig = if i == 0 { p.as_str() } else { "" };
                let cells = match six_number_summary(v) {
                    Ok(s) => [s.min, s.q1, s.median, s.mean, s.q3, s.max].map(fmt_num).join("\t"),
                    Err(_) => ["-"; 6].join("\t"),
                };
                let _ = writeln!(cont, "{}\t{}\t{name}\t{}\t{cells}\t{sig}", var.group, var.name, v.len());
            }
        }
    }
    format!(
        "Patients: {} ({} fallers, {} non-fallers)\n\n# Continuous variables (Welch t-test)\n{cont}\n# Binary variables (chi-squared test)\n{bin}",
        cohort.len(),
        cohort.n_fallers(),
        cohort.len() - cohort.n_fallers()
    )
}

pub fn describe(a: &DescribeArgs) -> CliResult<()> {
    let catalog = match &a.catalog {
        None => VariableCatalog::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(config(p.display()))?;
            VariableCatalog::from_json(&text).map_err(config(p.display()))?
        }
    };
    let text = std::fs::read_to_string(&a.cohort).map_err(config(a.cohort.display()))?;
    let cohort = parse_cohort_with(&text, &catalog).map_err(config(a.cohort.display()))?;
    write_or_print(None, &describe_cohort(&cohort))
}

pub fn cmd_benchmark(a: &BenchmarkArgs) -> CliResult<()> {
    let cfg = BenchmarkConfig::load(&a.run.config)?;
    let seed = resolve_seed(a.run.seed, cfg.seed)?;
    let aggregation = if a.pooled_metrics { Aggregation::Pooled } else { Aggregation::FoldMean };
    let started = std::time::Instant::now();
    let out = with_jobs(a.run.jobs, || benchmark(&cfg, seed, aggregation))??;
    let dir = a.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    out.write(&dir)?;
    eprintln!(
        "{} strategies written to {} in {:.1}s",
        out.predictions.len(),
        dir.display(),
        started.elapsed().as_secs_f64()
    );
    write_or_print(None, &out.report)
}

pub fn cmd_roc(a: &RocArgs) -> CliResult<()> {
    let cfg = BenchmarkConfig::load(&a.run.config)?;
    let seed = resolve_seed(a.run.seed, cfg.seed)?;
    let catalog = cfg.load_catalog()?;
    cfg.validate(&catalog)?;
    let sc = cfg.strategy(&a.strategy)?.clone();
    let curve = with_jobs(a.run.jobs, || -> CliResult<_> {
        let cohort = load_cohort(&cfg.cohort, &catalog, seed)?;
        let run = run_configured(&sc, &cohort, &catalog, cfg.folds, seed)?;
        Ok(match a.bands {
            Some(b) => roc_bands(&run.predictions, b, 0.05, derive(seed, &[label_id("roc")]))?,
            None => roc(&run.predictions)?,
        })
    })??;
    let path = a
        .out
        .clone()
        .unwrap_or_else(|| cfg.output_dir.join(format!("{}.roc.csv", file_stem(&sc.label))));
    write_or_print(Some(&path), &curve.to_csv())?;
    println!("AUROC\t{:.4}", curve.auroc);
    Ok(())
}

fn read_predictions(path: &Path) -> CliResult<PredictionSet> {
    let text = std::fs::read_to_string(path).map_err(config(path.display()))?;
    PredictionSet::from_csv(&text, DEFAULT_THRESHOLD).map_err(config(path.display()))
}

pub fn compare(a: &CompareArgs) -> CliResult<()> {
    let (pa, pb) = (read_predictions(&a.a)?, read_predictions(&a.b)?);
    let metrics: Vec<Metric> = if a.metrics.is_empty() {
        Metric::ALL.to_vec()
    } else {
        a.metrics
            .iter()
            .map(|m| m.parse::<Metric>().map_err(config("--metric")))
            .collect::<CliResult<_>>()?
    };
    let mut out = String::from("Metric\tStatistic\tPairs\tWilcoxon p\tDegenerate\n");
    for m in metrics {
        let t = fallbench_core::eval::compare_strategies(&pa, &pb, m).map_err(CliError::Runtime)?;
        let _ = writeln!(out, "{m}\t{}\t{}\t{}\t{}", t.statistic, t.n, format_p(t.p_value), t.degenerate);
    }
    write_or_print(None, &out)
}
