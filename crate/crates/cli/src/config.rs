//! JSON benchmark configuration.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use fallbench_core::eval::ThresholdObjective;
use fallbench_core::{Fallback, Family, Metric, ModelSpec, TuningGrid, VariableCatalog};

use crate::error::{config, CliError, CliResult};

pub const SEED_ENV: &str = "FALLBENCH_SEED";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum CohortSource {
    /// A cohort CSV file.
    Csv { path: PathBuf },
    /// Generated from a spec file, or from the built-in spec when absent.
    Synthetic {
        #[serde(default)]
        spec: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GridSetting {
    /// `true` selects the family's shipped grid.
    Enabled(bool),
    Custom(TuningGrid),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub label: String,
    pub family: Family,
    pub variable_set: String,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub grid: Option<GridSetting>,
    #[serde(default)]
    pub fallback: Fallback,
    /// Fixed decision threshold (default 0.5).
    #[serde(default)]
    pub threshold: Option<f64>,
    /// Pick the threshold on the out-of-fold scores instead.
    #[serde(default)]
    pub threshold_objective: Option<ThresholdObjective>,
}

impl StrategyConfig {
    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec { family: self.family, hyperparameters: self.hyperparameters.clone(), seed: 0 }
    }

    pub fn tuning_grid(&self) -> Option<TuningGrid> {
        match &self.grid {
            None | Some(GridSetting::Enabled(false)) => None,
            Some(GridSetting::Enabled(true)) => TuningGrid::default_for(self.family),
            Some(GridSetting::Custom(g)) => Some(g.clone()),
        }
    }

    /// Strategies with equal keys are evaluated on the same patients.
    pub fn population_key(&self) -> String {
        match self.fallback {
            Fallback::MajorityOnMissing => format!("fallback:{}", self.variable_set),
            Fallback::None => format!("complete:{}", self.variable_set),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub cohort: CohortSource,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub catalog: Option<PathBuf>,
    pub strategies: Vec<StrategyConfig>,
    #[serde(default)]
    pub comparisons: Vec<(String, String)>,
    /// Metrics tested for every comparison (default: all five).
    #[serde(default)]
    pub comparison_metrics: Option<Vec<String>>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn default_folds() -> usize {
    10
}

fn default_output() -> PathBuf {
    PathBuf::from("fallbench-out")
}

/// File-name-safe form of a strategy label.
pub fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

impl BenchmarkConfig {
    /// Read a config; relative paths inside it are taken relative to the
    /// config file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(config(path.display()))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(config(path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut cfg.cohort {
            CohortSource::Csv { path } => rebase(path),
            CohortSource::Synthetic { spec: Some(p) } => rebase(p),
            CohortSource::Synthetic { spec: None } => {}
        }
        if let Some(c) = &mut cfg.catalog {
            rebase(c);
        }
        rebase(&mut cfg.output_dir);
        Ok(cfg)
    }

    pub fn load_catalog(&self) -> CliResult<VariableCatalog> {
        match &self.catalog {
            None => Ok(VariableCatalog::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(config(p.display()))?;
                VariableCatalog::from_json(&text).map_err(config(p.display()))
            }
        }
    }

    pub fn comparison_metrics(&self) -> CliResult<Vec<Metric>> {
        match &self.comparison_metrics {
            None => Ok(Metric::ALL.to_vec()),
            Some(names) => names
                .iter()
                .map(|n| n.parse::<Metric>().map_err(config("comparison_metrics")))
                .collect(),
        }
    }

    /// Everything that can be checked without touching the cohort.
    pub fn validate(&self, catalog: &VariableCatalog) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if self.strategies.is_empty() {
            return bad("no strategies configured".into());
        }
        let mut labels = HashSet::new();
        let mut stems = HashSet::new();
        for s in &self.strategies {
            if !labels.insert(s.label.as_str()) {
                return bad(format!("strategy label {} is used twice", s.label));
            }
            if !stems.insert(file_stem(&s.label)) {
                return bad(format!("strategy label {} collides with another as a file name", s.label));
            }
            catalog.set(&s.variable_set).map_err(config(format!("strategy {}", s.label)))?;
            s.model_spec().validate().map_err(config(format!("strategy {}", s.label)))?;
            if let Some(GridSetting::Enabled(true)) = s.grid {
                if s.tuning_grid().is_none() {
                    return bad(format!("strategy {}: {} has no tuning grid", s.label, s.family));
                }
            }
            if let Some(g) = s.tuning_grid() {
                g.validate_for(s.family).map_err(config(format!("strategy {}", s.label)))?;
            }
            if s.threshold.is_some() && s.threshold_objective.is_some() {
                return bad(format!("strategy {}: give a threshold or an objective, not both", s.label));
            }
            if let Some(t) = s.threshold {
                if !(0.0..=1.0).contains(&t) {
                    return bad(format!("strategy {}: threshold {t} outside [0, 1]", s.label));
                }
            }
            if let Some(ThresholdObjective::MinSpecificity(t)) = s.threshold_objective {
                if !(0.0..=1.0).contains(&t) {
                    return bad(format!("strategy {}: specificity target {t} outside [0, 1]", s.label));
                }
            }
        }
        for (a, b) in &self.comparisons {
            let find = |l: &str| self.strategies.iter().find(|s| s.label == l);
            let (Some(sa), Some(sb)) = (find(a), find(b)) else {
                return bad(format!("comparison {a} vs {b} names an unknown strategy"));
            };
            if sa.population_key() != sb.population_key() {
                return bad(format!("comparison {a} vs {b}: strategies are evaluated on different populations"));
            }
        }
        self.comparison_metrics()?;
        Ok(())
    }

    pub fn strategy(&self, label: &str) -> CliResult<&StrategyConfig> {
        self.strategies
            .iter()
            .find(|s| s.label == label)
            .ok_or_else(|| CliError::Config(format!("no strategy labelled {label}")))
    }
}

/// `--seed`, then the config's seed, then `FALLBENCH_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, configured: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag.or(configured) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|e| CliError::Config(format!("{SEED_ENV}={v:?}: {e}"))),
        Err(_) => Ok(0),
    }
}
