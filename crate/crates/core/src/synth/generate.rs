use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{quantile_sampler, CohortSpec, VariableKind, VariableModel};
use crate::cohort::{Cohort, Outcome, PatientRecord, Variable};
use crate::error::Result;
use crate::seed::{derive, label_id, rng};
use crate::stats::SixNumberSummary;

// stream ids under the cohort spec seed
const LAYOUT: u64 = 0;
const VALUES: u64 = 1;
const MISSING: u64 = 2;

/// Uniforms for `n` records × `p` variables of one group within one class.
///
/// Each column is stratified: the ranks of correlated normals choose the
/// stratum, a fresh uniform places the value within it. With `rho = 0`
/// this is plain Latin-hypercube sampling.
fn stratified_uniforms(n: usize, p: usize, rho: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    let z: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let g: f64 = r.sample(StandardNormal);
            (0..p).map(|_| a * g + b * r.sample::<f64, _>(StandardNormal)).collect()
        })
        .collect();
    let mut u = vec![vec![0.0; p]; n];
    for j in 0..p {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| z[x][j].total_cmp(&z[y][j]));
        for (rank, &i) in order.iter().enumerate() {
            let v: f64 = r.random();
            u[i][j] = (rank as f64 + v) / n as f64;
        }
    }
    u
}

fn draw(model: &VariableModel, faller: bool, u: f64) -> f64 {
    match &model.kind {
        VariableKind::Continuous { summary, integer } => {
            let s = summary.get(faller);
            let x = quantile_sampler(&s)(u);
            if *integer {
                x.round().clamp(s.min, s.max)
            } else {
                x
            }
        }
        VariableKind::Binary { p_yes } => {
            if u < p_yes.get(faller) {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Draw a cohort from `spec`. Record ids are `P0001`, `P0002`, ...; faller
/// positions are shuffled; each group is present or absent as a block.
pub fn generate_cohort(spec: &CohortSpec) -> Result<Cohort> {
    spec.validate()?;
    let n = spec.n_total;
    let mut is_faller: Vec<bool> = (0..n).map(|i| i < spec.n_fallers).collect();
    is_faller.shuffle(&mut rng(derive(spec.seed, &[LAYOUT])));

    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (j, v) in spec.variables.iter().enumerate() {
        groups.entry(v.group.as_str()).or_default().push(j);
    }

    let mut values = vec![vec![0.0; spec.variables.len()]; n];
    for class in [true, false] {
        let members: Vec<usize> = (0..n).filter(|&i| is_faller[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        for (group, vars) in &groups {
            let rho = spec.copula_rho.get(*group).copied().unwrap_or(0.0);
            let seed = derive(spec.seed, &[VALUES, class as u64, label_id(group)]);
            let u = stratified_uniforms(members.len(), vars.len(), rho, seed);
            for (row, &i) in members.iter().enumerate() {
                for (col, &j) in vars.iter().enumerate() {
                    values[i][j] = draw(&spec.variables[j], class, u[row][col]);
                }
            }
        }
    }

    let width = n.to_string().len().max(4);
    let records = (0..n)
        .map(|i| {
            let mut r = rng(derive(spec.seed, &[MISSING, i as u64]));
            let present: BTreeMap<&str, bool> = groups
                .keys()
                .map(|g| {
                    let p = spec.missingness.get(*g).map_or(1.0, |a| a.get(is_faller[i]));
                    (*g, r.random::<f64>() < p)
                })
                .collect();
            let features = spec
                .variables
                .iter()
                .enumerate()
                .map(|(j, v)| (v.name.clone(), present[v.group.as_str()].then_some(values[i][j])))
                .collect();
            PatientRecord {
                id: format!("P{:0width$}", i + 1),
                outcome: Outcome::from_faller(is_faller[i]),
                features,
            }
        })
        .collect();
    let schema = spec
        .variables
        .iter()
        .map(|v| Variable { name: v.name.clone(), group: v.group.clone() })
        .collect();
    Cohort::new(records, schema)
}

/// Gap between a published mean and the mean implied by the quantile
/// sampler (which follows the quartiles and ignores the mean).
#[derive(Debug, Clone, PartialEq)]
pub struct MeanResidual {
    pub variable: String,
    pub faller: bool,
    pub published: f64,
    pub implied: f64,
}

impl MeanResidual {
    pub fn residual(&self) -> f64 {
        self.published - self.implied
    }
}

/// Mean of the piecewise-linear distribution: each quarter contributes its
/// midpoint.
fn implied_mean(s: &SixNumberSummary) -> f64 {
    let k = s.knots();
    (0..4).map(|i| 0.125 * (k[i] + k[i + 1])).sum()
}

pub fn mean_residuals(spec: &CohortSpec) -> Vec<MeanResidual> {
    let mut out = Vec::new();
    for v in &spec.variables {
        if let VariableKind::Continuous { summary, .. } = &v.kind {
            for faller in [true, false] {
                let s = summary.get(faller);
                out.push(MeanResidual {
                    variable: v.name.clone(),
                    faller,
                    published: s.mean,
                    implied: implied_mean(&s),
                });
            }
        }
    }
    out
}
