use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::folds::stratified_assignment;
use super::normalize::Normalizer;
use crate::error::{invalid, Error, Result};
use crate::learners::{self, Family, ModelSpec, Params};
use crate::matrix::Matrix;
use crate::seed;

pub const INNER_FOLDS: usize = 3;

/// Ordered list of hyperparameter settings to try.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    pub points: Vec<BTreeMap<String, f64>>,
}

fn powers_of_two(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 2f64.powi(e)).collect()
}

impl TuningGrid {
    /// Cartesian product of the axes; the first axis varies slowest.
    pub fn from_axes(axes: &[(&str, Vec<f64>)]) -> Result<Self> {
        let mut points = vec![BTreeMap::new()];
        for (name, values) in axes {
            if values.is_empty() {
                return Err(invalid(format!("tuning axis {name} has no values")));
            }
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.insert(name.to_string(), *v);
                        q
                    })
                })
                .collect();
        }
        Ok(Self { points })
    }

    /// The shipped grid for a family, if it is tunable.
    pub fn default_for(family: Family) -> Option<Self> {
        let axes: Vec<(&str, Vec<f64>)> = match family {
            Family::SvmLinear => vec![("C", powers_of_two(-4, 4))],
            Family::SvmGauss => vec![("C", powers_of_two(-2, 2)), ("sigma", powers_of_two(-2, 2))],
            Family::RandomForest => vec![("ntree", vec![100.0, 250.0, 500.0, 1000.0, 2000.0])],
            _ => return None,
        };
        Self::from_axes(&axes).ok()
    }

    pub fn validate_for(&self, family: Family) -> Result<()> {
        if self.points.is_empty() {
            return Err(invalid("tuning grid is empty"));
        }
        for p in &self.points {
            let mut spec = ModelSpec::new(family);
            spec.hyperparameters = p.clone();
            spec.validate()?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Select the grid point with the lowest inner cross-validated
/// misclassification error (threshold 0.5); ties go to the earliest point.
///
/// `x` is the raw (unnormalized) training matrix; each inner split is
/// normalized on its own training rows.
pub fn tune(
    spec: &ModelSpec,
    grid: &TuningGrid,
    x: &Matrix,
    y: &[bool],
    inner_k: usize,
    seed_: u64,
) -> Result<ModelSpec> {
    grid.validate_for(spec.family)?;
    if grid.points.len() == 1 {
        return Ok(with_point(spec, &grid.points[0]));
    }
    let pos = y.iter().filter(|&&b| b).count();
    if pos < 2 || y.len() - pos < 2 || y.len() < inner_k {
        return Err(Error::SingleClass(format!(
            "inner tuning folds need at least two patients of each class ({pos} fallers of {})",
            y.len()
        )));
    }
    let folds = stratified_assignment(y, inner_k, seed_);
    let mut errors = vec![0usize; grid.points.len()];
    for f in 0..inner_k {
        let train: Vec<usize> = (0..y.len()).filter(|&i| folds[i] != f).collect();
        let test: Vec<usize> = (0..y.len()).filter(|&i| folds[i] == f).collect();
        let y_train: Vec<bool> = train.iter().map(|&i| y[i]).collect();
        let norm = Normalizer::fit(&x.select_rows(&train));
        let x_train = norm.apply(&x.select_rows(&train));
        let x_test = norm.apply(&x.select_rows(&test));
        let inner_seed = seed::derive(spec.seed, &[f as u64]);
        let truth: Vec<bool> = test.iter().map(|&i| y[i]).collect();

        if let Some(max_trees) = forest_sizes(spec.family, grid) {
            // Trees are seeded by index, so smaller forests are prefixes of the
            // largest one.
            let big = ModelSpec { hyperparameters: grid.points[0].clone(), ..spec.clone() }
                .with("ntree", max_trees as f64)
                .with_seed(inner_seed);
            let model = learners::fit(&big, &x_train, &y_train)?;
            let Params::Forest(rf) = &model.params else { unreachable!() };
            let votes: Vec<Vec<u32>> = x_test
                .rows()
                .map(|r| {
                    let mut acc = 0;
                    rf.trees
                        .iter()
                        .map(|t| {
                            acc += u32::from(t.votes_faller(r));
                            acc
                        })
                        .collect()
                })
                .collect();
            for (g, point) in grid.points.iter().enumerate() {
                let m = point["ntree"].round().max(1.0) as usize;
                errors[g] += votes
                    .iter()
                    .zip(&truth)
                    .filter(|(v, &t)| (f64::from(v[m - 1]) / m as f64 > 0.5) != t)
                    .count();
            }
            continue;
        }

        for (g, point) in grid.points.iter().enumerate() {
            let candidate = with_point(spec, point).with_seed(inner_seed);
            let model = learners::fit(&candidate, &x_train, &y_train)?;
            let scores = model.score_rows(&x_test)?;
            errors[g] += scores.iter().zip(&truth).filter(|(s, &t)| (**s > 0.5) != t).count();
        }
    }
    let best = (0..errors.len()).min_by_key(|&g| (errors[g], g)).unwrap();
    Ok(with_point(spec, &grid.points[best]))
}

fn with_point(spec: &ModelSpec, point: &BTreeMap<String, f64>) -> ModelSpec {
    let mut out = spec.clone();
    out.hyperparameters.extend(point.iter().map(|(k, v)| (k.clone(), *v)));
    out
}

/// Largest forest size when the grid varies nothing but `ntree`.
fn forest_sizes(family: Family, grid: &TuningGrid) -> Option<usize> {
    if family != Family::RandomForest
        || !grid.points.iter().all(|p| p.len() == 1 && p.contains_key("ntree"))
    {
        return None;
    }
    grid.points.iter().map(|p| p["ntree"].round().max(1.0) as usize).max()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids_match_declared_values() {
        let lin = TuningGrid::default_for(Family::SvmLinear).unwrap();
        assert_eq!(lin.len(), 9);
        assert_eq!(lin.points[0]["C"], 0.0625);
        assert_eq!(lin.points[8]["C"], 16.0);
        let gauss = TuningGrid::default_for(Family::SvmGauss).unwrap();
        assert_eq!(gauss.len(), 25);
        assert_eq!((gauss.points[1]["C"], gauss.points[1]["sigma"]), (0.25, 0.5));
        let rf = TuningGrid::default_for(Family::RandomForest).unwrap();
        let trees: Vec<f64> = rf.points.iter().map(|p| p["ntree"]).collect();
        assert_eq!(trees, vec![100.0, 250.0, 500.0, 1000.0, 2000.0]);
        assert!(TuningGrid::default_for(Family::LDA).is_none());
    }

    fn wide_margin() -> (Matrix, Vec<bool>) {
        // Separable by the second feature alone, but the class centroids also
        // differ along the first, bimodal feature; a soft margin leans on it.
        let n = 40;
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let t = i as f64 / n as f64;
            rows.push(vec![0.01 * t, 0.05 + t]);
            y.push(true);
            let x1 = if t < 0.75 { 2.0 } else { -0.8 };
            rows.push(vec![x1, -0.05 - (i * 7 % n) as f64 / n as f64]);
            y.push(false);
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    fn inner_errors(spec: &ModelSpec, x: &Matrix, y: &[bool], seed_: u64) -> usize {
        // Independent re-implementation of one grid point's inner CV.
        let folds = stratified_assignment(y, 3, seed_);
        let mut errors = 0;
        for f in 0..3 {
            let tr: Vec<usize> = (0..y.len()).filter(|&i| folds[i] != f).collect();
            let te: Vec<usize> = (0..y.len()).filter(|&i| folds[i] == f).collect();
            let n = Normalizer::fit(&x.select_rows(&tr));
            let ytr: Vec<bool> = tr.iter().map(|&i| y[i]).collect();
            let m = learners::fit(spec, &n.apply(&x.select_rows(&tr)), &ytr).unwrap();
            for &i in &te {
                let s = m.score(&n.apply_row(x.row(i))).unwrap();
                errors += usize::from((s > 0.5) != y[i]);
            }
        }
        errors
    }

    #[test]
    fn selection_agrees_with_exhaustive_inner_cv() {
        let (x, y) = wide_margin();
        let grid = TuningGrid::from_axes(&[("C", vec![0.0625, 16.0])]).unwrap();
        let spec = ModelSpec::new(Family::SvmLinear);
        let chosen = tune(&spec, &grid, &x, &y, 3, 21).unwrap();
        let e: Vec<usize> = grid
            .points
            .iter()
            .map(|p| {
                let s = ModelSpec::new(Family::SvmLinear).with("C", p["C"]);
                inner_errors(&s, &x, &y, 21)
            })
            .collect();
        assert!(e[1] < e[0], "inner errors {e:?}");
        assert_eq!(chosen.param("C"), 16.0);
        assert_eq!(tune(&spec, &grid, &x, &y, 3, 21).unwrap(), chosen);
    }

    #[test]
    fn single_point_grid_is_returned() {
        let (x, y) = wide_margin();
        let grid = TuningGrid::from_axes(&[("C", vec![2.0])]).unwrap();
        let t = tune(&ModelSpec::new(Family::SvmLinear), &grid, &x, &y, 3, 0).unwrap();
        assert_eq!(t.param("C"), 2.0);
    }

    #[test]
    fn forest_prefix_shortcut_matches_separate_fits() {
        let (x, y) = wide_margin();
        let grid = TuningGrid::from_axes(&[("ntree", vec![3.0, 7.0, 15.0])]).unwrap();
        let spec = ModelSpec::new(Family::RandomForest).with_seed(4);
        let chosen = tune(&spec, &grid, &x, &y, 3, 8).unwrap();
        let folds = stratified_assignment(&y, 3, 8);
        let mut e = [0usize; 3];
        for (g, point) in grid.points.iter().enumerate() {
            for f in 0..3 {
                let tr: Vec<usize> = (0..y.len()).filter(|&i| folds[i] != f).collect();
                let n = Normalizer::fit(&x.select_rows(&tr));
                let ytr: Vec<bool> = tr.iter().map(|&i| y[i]).collect();
                let s = ModelSpec::new(Family::RandomForest)
                    .with("ntree", point["ntree"])
                    .with_seed(seed::derive(4, &[f as u64]));
                let m = learners::fit(&s, &n.apply(&x.select_rows(&tr)), &ytr).unwrap();
                for i in (0..y.len()).filter(|&i| folds[i] == f) {
                    let sc = m.score(&n.apply_row(x.row(i))).unwrap();
                    e[g] += usize::from((sc > 0.5) != y[i]);
                }
            }
        }
        let best = (0..3).min_by_key(|&g| (e[g], g)).unwrap();
        assert_eq!(chosen.param("ntree"), grid.points[best]["ntree"]);
    }

    #[test]
    fn too_few_of_a_class_is_an_error() {
        let x = Matrix::new(5, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = [true, false, false, false, false];
        let grid = TuningGrid::default_for(Family::SvmLinear).unwrap();
        assert!(tune(&ModelSpec::new(Family::SvmLinear), &grid, &x, &y, 3, 0).is_err());
    }
}
