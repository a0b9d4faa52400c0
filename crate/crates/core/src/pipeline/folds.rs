use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::cohort::Cohort;
use crate::error::{invalid, Error, Result};
use crate::seed;

/// Assignment of patients to `k` outer folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    assignment: BTreeMap<String, usize>,
}

/// Stratified fold indices for a label vector: fallers and non-fallers are
/// shuffled separately, concatenated, and dealt round-robin.
pub fn stratified_assignment(labels: &[bool], k: usize, seed_: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed_);
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut fold = vec![0; labels.len()];
    for (slot, i) in pos.into_iter().chain(neg).enumerate() {
        fold[i] = slot % k;
    }
    fold
}

pub fn make_fold_plan(cohort: &Cohort, k: usize, seed_: u64) -> Result<FoldPlan> {
    let n = cohort.len();
    if k < 2 {
        return Err(invalid(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(invalid(format!("{k} folds requested for {n} patients")));
    }
    let labels = cohort.labels();
    let pos = labels.iter().filter(|&&b| b).count();
    if pos == 0 || pos == n {
        return Err(Error::SingleClass("fold plan population".into()));
    }
    let folds = stratified_assignment(&labels, k, seed_);
    let assignment =
        cohort.records().iter().zip(folds).map(|(r, f)| (r.id.clone(), f)).collect();
    Ok(FoldPlan { k, seed: seed_, assignment })
}

impl FoldPlan {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignment.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Fold index of every record of `cohort`, in cohort order. Fails unless
    /// the plan covers exactly the cohort's patients.
    pub fn folds_for(&self, cohort: &Cohort) -> Result<Vec<usize>> {
        if cohort.len() != self.assignment.len() {
            return Err(invalid(format!(
                "fold plan covers {} patients but the population has {}",
                self.assignment.len(),
                cohort.len()
            )));
        }
        cohort
            .records()
            .iter()
            .map(|r| {
                self.fold_of(&r.id)
                    .ok_or_else(|| invalid(format!("patient {} is not in the fold plan", r.id)))
            })
            .collect()
    }

    /// The plan's assignment for a sub-population (e.g. the complete cases
    /// of a variable set), so every strategy sees the same folds.
    pub fn restrict(&self, cohort: &Cohort) -> Result<FoldPlan> {
        let assignment = cohort
            .records()
            .iter()
            .map(|r| {
                self.fold_of(&r.id)
                    .map(|f| (r.id.clone(), f))
                    .ok_or_else(|| invalid(format!("patient {} is not in the fold plan", r.id)))
            })
            .collect::<Result<_>>()?;
        Ok(FoldPlan { k: self.k, seed: self.seed, assignment })
    }

    /// Extend the plan to a larger population: patients already assigned
    /// keep their fold, the rest are stratified separately with `seed_`.
    /// A fallback strategy evaluated on the extension then sees exactly the
    /// complete-case folds of the strategy this plan came from.
    pub fn extend_to(&self, cohort: &Cohort, seed_: u64) -> Result<FoldPlan> {
        let (known, new): (Vec<_>, Vec<_>) =
            cohort.records().iter().partition(|r| self.assignment.contains_key(&r.id));
        if known.len() != self.assignment.len() {
            return Err(invalid("fold plan is not a subset of the population"));
        }
        let labels: Vec<bool> = new.iter().map(|r| r.outcome.is_faller()).collect();
        let mut assignment = self.assignment.clone();
        for (r, f) in new.iter().zip(stratified_assignment(&labels, self.k, seed_)) {
            assignment.insert(r.id.clone(), f);
        }
        Ok(FoldPlan { k: self.k, seed: self.seed, assignment })
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.assignment.values() {
            sizes[f] += 1;
        }
        sizes
    }
}
