//! The nine model families behind one fit/score interface.
//!
//! Every fitted model maps a complete feature vector to a fall score in
//! `[0, 1]`; [`predict`] turns that score into a label by `score > threshold`.

mod forest;
mod lda;
mod logistic;
mod naive_bayes;
mod nnet;
mod svm;

use std::collections::BTreeMap;
use std::fmt;
use std::hash::{DefaultHasher, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::Matrix;

pub use forest::{RandomForest, Tree};
pub use lda::Lda;
pub use logistic::LogisticRegression;
pub use naive_bayes::NaiveBayes;
pub use nnet::{AveragedNetwork, NeuralNet, NetConfig};
pub use svm::{Kernel, Svm, SvmSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    LogisticRegression,
    #[serde(alias = "Lda")]
    LDA,
    NaiveBayes,
    SvmLinear,
    SvmGauss,
    RandomForest,
    NeuralNet,
    AvNNet,
    Majority,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::LogisticRegression,
        Family::LDA,
        Family::SvmLinear,
        Family::SvmGauss,
        Family::RandomForest,
        Family::NaiveBayes,
        Family::NeuralNet,
        Family::AvNNet,
        Family::Majority,
    ];

    /// Hyperparameter names the family accepts, with their defaults.
    pub fn hyperparameters(self) -> &'static [(&'static str, f64)] {
        match self {
            Family::SvmLinear => &[("C", 1.0)],
            Family::SvmGauss => &[("C", 1.0), ("sigma", 1.0)],
            Family::RandomForest => &[("ntree", 500.0)],
            Family::NeuralNet | Family::AvNNet => &[("size", 5.0), ("decay", 0.01)],
            _ => &[],
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Family::LogisticRegression => "Logistic Regression",
            Family::LDA => "Linear Discriminant Analysis",
            Family::NaiveBayes => "Naive Bayes",
            Family::SvmLinear => "SVM (Linear)",
            Family::SvmGauss => "SVM (Gauss)",
            Family::RandomForest => "Random Forest",
            Family::NeuralNet => "Neural Net",
            Family::AvNNet => "avNNet",
            Family::Majority => "Majority",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Family::RandomForest | Family::NeuralNet | Family::AvNNet)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(family: Family) -> Self {
        Self { family, hyperparameters: BTreeMap::new(), seed: 0 }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.hyperparameters.insert(name.to_string(), value);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let declared = self.family.hyperparameters();
        for (name, value) in &self.hyperparameters {
            if !declared.iter().any(|(d, _)| d == name) {
                return Err(invalid(format!(
                    "{} does not take hyperparameter {name}",
                    self.family
                )));
            }
            let allow_zero = name == "decay";
            if !value.is_finite() || *value < 0.0 || (*value == 0.0 && !allow_zero) {
                return Err(invalid(format!("hyperparameter {name} = {value} out of range")));
            }
        }
        Ok(())
    }

    /// Value of a hyperparameter, falling back to the family default.
    pub fn param(&self, name: &str) -> f64 {
        self.hyperparameters.get(name).copied().unwrap_or_else(|| {
            self.family
                .hyperparameters()
                .iter()
                .find(|(d, _)| *d == name)
                .map(|(_, v)| *v)
                .unwrap_or(f64::NAN)
        })
    }
}

#[derive(Debug, Clone)]
pub enum Params {
    Majority,
    Logistic(LogisticRegression),
    Lda(Lda),
    NaiveBayes(NaiveBayes),
    Svm(Svm),
    Forest(RandomForest),
    Net(NeuralNet),
    AvNet(AveragedNetwork),
}

#[derive(Debug, Clone)]
pub struct FittedModel {
    pub family: Family,
    pub params: Params,
    pub n_features: usize,
}

pub(crate) fn check_training(x: &Matrix, y: &[bool], family: Family) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(invalid(format!("{} rows but {} labels", x.nrows(), y.len())));
    }
    if !x.all_finite() {
        return Err(invalid("training matrix contains non-finite values"));
    }
    if family == Family::Majority {
        if y.is_empty() {
            return Err(invalid("majority model needs at least one row"));
        }
        return Ok(());
    }
    if y.len() < 2 {
        return Err(invalid("need at least two training rows"));
    }
    let pos = y.iter().filter(|&&b| b).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::SingleClass(format!("{family} training data")));
    }
    Ok(())
}

/// Fit a model. Deterministic given `spec.seed`.
pub fn fit(spec: &ModelSpec, x: &Matrix, y: &[bool]) -> Result<FittedModel> {
    spec.validate()?;
    check_training(x, y, spec.family)?;
    let params = match spec.family {
        Family::Majority => Params::Majority,
        Family::LogisticRegression => Params::Logistic(LogisticRegression::fit(x, y)?),
        Family::LDA => Params::Lda(Lda::fit(x, y)?),
        Family::NaiveBayes => Params::NaiveBayes(NaiveBayes::fit(x, y)),
        Family::SvmLinear => Params::Svm(Svm::fit(x, y, Kernel::Linear, spec.param("C"))?),
        Family::SvmGauss => Params::Svm(Svm::fit(
            x,
            y,
            Kernel::Gaussian { sigma: spec.param("sigma") },
            spec.param("C"),
        )?),
        Family::RandomForest => {
            let ntree = spec.param("ntree").round().max(1.0) as usize;
            Params::Forest(RandomForest::fit(x, y, ntree, spec.seed))
        }
        Family::NeuralNet => Params::Net(NeuralNet::fit(x, y, &net_config(spec), spec.seed)),
        Family::AvNNet => {
            Params::AvNet(AveragedNetwork::fit(x, y, &net_config(spec), 5, spec.seed))
        }
    };
    Ok(FittedModel { family: spec.family, params, n_features: x.ncols() })
}

fn net_config(spec: &ModelSpec) -> NetConfig {
    NetConfig {
        hidden: spec.param("size").round().max(1.0) as usize,
        decay: spec.param("decay"),
        ..NetConfig::default()
    }
}

impl FittedModel {
    /// Fall score in `[0, 1]`.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, got: x.len() });
        }
        let s = match &self.params {
            Params::Majority => 0.0,
            Params::Logistic(m) => m.probability(x),
            Params::Lda(m) => m.probability(x),
            Params::NaiveBayes(m) => m.probability(x),
            Params::Svm(m) => m.probability(x),
            Params::Forest(m) => m.vote_fraction(x),
            Params::Net(m) => m.forward(x),
            Params::AvNet(m) => m.forward(x),
        };
        Ok(if s.is_nan() { 0.0 } else { s.clamp(0.0, 1.0) })
    }

    pub fn score_rows(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.rows().map(|r| self.score(r)).collect()
    }

    /// Hash of every learned parameter; equal fingerprints mean equal models.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        h.write_u8(self.family as u8);
        h.write_usize(self.n_features);
        let mut put = |v: &[f64]| v.iter().for_each(|x| h.write_u64(x.to_bits()));
        match &self.params {
            Params::Majority => {}
            Params::Logistic(m) => put(&m.parameters()),
            Params::Lda(m) => put(&m.parameters()),
            Params::NaiveBayes(m) => put(&m.parameters()),
            Params::Svm(m) => put(&m.parameters()),
            Params::Forest(m) => put(&m.parameters()),
            Params::Net(m) => put(&m.parameters()),
            Params::AvNet(m) => m.members.iter().for_each(|n| put(&n.parameters())),
        }
        h.finish()
    }
}

pub fn score(model: &FittedModel, x: &[f64]) -> Result<f64> {
    model.score(x)
}

/// `true` (faller) iff the score exceeds `threshold`.
pub fn predict(model: &FittedModel, x: &[f64], threshold: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(invalid(format!("threshold {threshold} outside [0, 1]")));
    }
    Ok(model.score(x)? > threshold)
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
