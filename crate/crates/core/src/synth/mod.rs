//! Synthetic cohorts whose per-class marginals follow published six-number
//! summaries, with group-block missingness.

mod generate;
mod tables;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::stats::SixNumberSummary;

pub use generate::{generate_cohort, mean_residuals, MeanResidual};
pub use tables::{default_cohort_spec, histogram_summary, normal_summary};

/// Per-class value of something (summary, probability, availability).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerClass<T> {
    pub faller: T,
    pub non_faller: T,
}

impl<T: Copy> PerClass<T> {
    pub fn get(&self, faller: bool) -> T {
        if faller {
            self.faller
        } else {
            self.non_faller
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariableKind {
    Continuous {
        summary: PerClass<SixNumberSummary>,
        /// Round draws to whole numbers (then clamp to the class range).
        #[serde(default)]
        integer: bool,
    },
    /// Encoded 0/1; `p_yes` is the probability of 1.
    Binary { p_yes: PerClass<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableModel {
    pub name: String,
    pub group: String,
    #[serde(flatten)]
    pub kind: VariableKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n_total: usize,
    pub n_fallers: usize,
    pub variables: Vec<VariableModel>,
    /// Group → probability that a patient has the whole group recorded.
    /// Groups not listed are always present.
    #[serde(default)]
    pub missingness: BTreeMap<String, PerClass<f64>>,
    /// Group → equicorrelation of the Gaussian copula within the group.
    #[serde(default)]
    pub copula_rho: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
}

impl CohortSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_fallers > self.n_total {
            return Err(invalid(format!(
                "{} fallers requested in a cohort of {}",
                self.n_fallers, self.n_total
            )));
        }
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        let mut seen = std::collections::HashSet::new();
        for v in &self.variables {
            if !seen.insert(v.name.as_str()) {
                return Err(invalid(format!("variable {} is defined twice", v.name)));
            }
            match &v.kind {
                VariableKind::Continuous { summary, .. } => {
                    summary.faller.validate()?;
                    summary.non_faller.validate()?;
                }
                VariableKind::Binary { p_yes } => {
                    if !unit(p_yes.faller) || !unit(p_yes.non_faller) {
                        return Err(invalid(format!("{}: probability outside [0, 1]", v.name)));
                    }
                }
            }
        }
        for (g, a) in &self.missingness {
            if !unit(a.faller) || !unit(a.non_faller) {
                return Err(invalid(format!("group {g}: availability outside [0, 1]")));
            }
        }
        for (g, rho) in &self.copula_rho {
            if !(0.0..1.0).contains(rho) {
                return Err(invalid(format!("group {g}: copula correlation must be in [0, 1)")));
            }
        }
        Ok(())
    }
}

/// Piecewise-linear inverse CDF through the five quantile knots.
pub fn quantile_sampler(summary: &SixNumberSummary) -> impl Fn(f64) -> f64 + '_ {
    let k = summary.knots();
    move |u: f64| {
        let u = u.clamp(0.0, 1.0);
        let seg = ((u * 4.0).floor() as usize).min(3);
        let t = u * 4.0 - seg as f64;
        if t == 0.0 {
            k[seg]
        } else {
            k[seg] + t * (k[seg + 1] - k[seg])
        }
    }
}
