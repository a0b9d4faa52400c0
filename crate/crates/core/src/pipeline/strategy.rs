use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::FoldPlan;
use super::normalize::Normalizer;
use super::predictions::{Prediction, PredictionSet};
use super::tuning::{tune, TuningGrid, INNER_FOLDS};
use crate::cohort::{completeness, Cohort, VariableSet};
use crate::error::{invalid, Error, Result};
use crate::learners::{self, Family, ModelSpec};
use crate::seed;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Stream id separating inner-tuning seeds from model seeds.
const INNER_STREAM: u64 = 0x1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Fallback {
    /// Only patients complete on the variable set are evaluated.
    #[default]
    None,
    /// Patients lacking any variable of the set are predicted non-fallers.
    MajorityOnMissing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionStrategy {
    pub label: String,
    pub spec: ModelSpec,
    /// Re-tuned inside every outer fold when present.
    pub grid: Option<TuningGrid>,
    pub variable_set: VariableSet,
    pub fallback: Fallback,
    pub threshold: f64,
}

impl PredictionStrategy {
    pub fn new(label: impl Into<String>, spec: ModelSpec, variable_set: VariableSet) -> Self {
        Self {
            label: label.into(),
            spec,
            grid: None,
            variable_set,
            fallback: Fallback::None,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn with_grid(mut self, grid: TuningGrid) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn with_fallback(mut self, fallback: Fallback) -> Self {
        self.fallback = fallback;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(invalid(format!(
                "strategy {}: threshold {} outside [0, 1]",
                self.label, self.threshold
            )));
        }
        if let Some(g) = &self.grid {
            g.validate_for(self.spec.family)?;
        }
        Ok(())
    }
}

/// Everything one outer fold learned, for the audit log and leakage checks.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldAudit {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_fallback: usize,
    pub model_seed: u64,
    pub inner_seed: u64,
    pub hyperparameters: BTreeMap<String, f64>,
    pub normalizer_fingerprint: u64,
    pub model_fingerprint: u64,
}

impl fmt::Display for FoldAudit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "fold={} n_train={} n_test={} n_fallback={} model_seed={} inner_seed={}",
            self.fold, self.n_train, self.n_test, self.n_fallback, self.model_seed, self.inner_seed
        )?;
        let params: Vec<String> =
            self.hyperparameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(
            f,
            " params={{{}}} normalizer={:016x} model={:016x}",
            params.join(","),
            self.normalizer_fingerprint,
            self.model_fingerprint
        )
    }
}

pub fn run_strategy(
    strategy: &PredictionStrategy,
    cohort: &Cohort,
    plan: &FoldPlan,
) -> Result<PredictionSet> {
    Ok(run_strategy_audited(strategy, cohort, plan)?.0)
}

/// Out-of-fold predictions for every patient of `cohort` under `plan`.
///
/// Training rows of fold `f` are the complete cases outside `f`; they are
/// normalized, optionally tuned, and fitted without ever seeing fold `f`.
pub fn run_strategy_audited(
    strategy: &PredictionStrategy,
    cohort: &Cohort,
    plan: &FoldPlan,
) -> Result<(PredictionSet, Vec<FoldAudit>)> {
    strategy.validate()?;
    let vs = &strategy.variable_set;
    vs.validate_for(cohort)?;
    let folds = plan.folds_for(cohort)?;
    let complete: Vec<bool> = cohort.records().iter().map(|r| completeness(r, vs)).collect();
    if strategy.fallback == Fallback::None {
        if let Some(i) = complete.iter().position(|c| !c) {
            return Err(invalid(format!(
                "strategy {}: patient {} is incomplete on {} and no fallback is configured",
                strategy.label,
                cohort.records()[i].id,
                vs.name
            )));
        }
    }
    let labels = cohort.labels();

    let per_fold: Vec<(Vec<(usize, f64)>, FoldAudit)> = (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> =
                (0..cohort.len()).filter(|&i| folds[i] != f && complete[i]).collect();
            let test: Vec<usize> = (0..cohort.len()).filter(|&i| folds[i] == f).collect();
            let y_train: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
            let pos = y_train.iter().filter(|&&b| b).count();
            if strategy.spec.family != Family::Majority
                && (pos == 0 || pos == y_train.len())
            {
                return Err(Error::SingleClass(format!(
                    "strategy {}: training data of fold {f} has a single class",
                    strategy.label
                )));
            }
            if y_train.is_empty() {
                return Err(Error::EmptyPopulation(format!(
                    "strategy {}: fold {f} has no training rows",
                    strategy.label
                )));
            }
            let model_seed = seed::derive(strategy.spec.seed, &[f as u64]);
            let inner_seed = seed::derive(plan.seed, &[f as u64, INNER_STREAM]);
            let x_train = cohort.matrix(vs, &train)?;
            let base = strategy.spec.clone().with_seed(model_seed);
            let spec = match &strategy.grid {
                Some(g) => tune(&base, g, &x_train, &y_train, INNER_FOLDS, inner_seed)?,
                None => base,
            };
            let norm = Normalizer::fit(&x_train);
            let model = learners::fit(&spec, &norm.apply(&x_train), &y_train)?;

            let mut scores = Vec::with_capacity(test.len());
            let mut n_fallback = 0;
            for &i in &test {
                if complete[i] {
                    let raw = cohort.matrix(vs, &[i])?;
                    scores.push((i, model.score(&norm.apply_row(raw.row(0)))?));
                } else {
                    n_fallback += 1;
                    scores.push((i, f64::NAN));
                }
            }
            let audit = FoldAudit {
                fold: f,
                n_train: train.len(),
                n_test: test.len(),
                n_fallback,
                model_seed,
                inner_seed,
                hyperparameters: spec.hyperparameters.clone(),
                normalizer_fingerprint: norm.fingerprint(),
                model_fingerprint: model.fingerprint(),
            };
            Ok((scores, audit))
        })
        .collect::<Result<_>>()?;

    let mut entries: Vec<Option<Prediction>> = vec![None; cohort.len()];
    let mut audits = Vec::with_capacity(plan.k);
    for (scores, audit) in per_fold {
        for (i, s) in scores {
            let r = &cohort.records()[i];
            let fallback_used = s.is_nan();
            let score = if fallback_used { 0.0 } else { s };
            entries[i] = Some(Prediction {
                id: r.id.clone(),
                fold: folds[i],
                truth: labels[i],
                score,
                predicted: !fallback_used && score > strategy.threshold,
                fallback_used,
            });
        }
        audits.push(audit);
    }
    let entries = entries.into_iter().map(|e| e.expect("every patient has a fold")).collect();
    Ok((PredictionSet { threshold: strategy.threshold, entries }, audits))
}
