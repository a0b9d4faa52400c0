use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::cohort::Outcome;
use crate::error::{invalid, Error, Result};

/// Out-of-fold prediction for one patient.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: String,
    pub fold: usize,
    /// `true` for a faller.
    pub truth: bool,
    pub score: f64,
    pub predicted: bool,
    /// The patient lacked the strategy's variables and got the majority
    /// prediction.
    pub fallback_used: bool,
}

/// Out-of-fold predictions of one strategy, in population order.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub threshold: f64,
    pub entries: Vec<Prediction>,
}

const HEADER: &str = "id,fold,truth,score,predicted,fallback_used";

impl PredictionSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of folds (one past the largest fold index).
    pub fn n_folds(&self) -> usize {
        self.entries.iter().map(|e| e.fold + 1).max().unwrap_or(0)
    }

    /// Entries grouped by fold, folds in index order, entries in set order.
    pub fn by_fold(&self) -> Vec<Vec<&Prediction>> {
        let mut folds = vec![Vec::new(); self.n_folds()];
        for e in &self.entries {
            folds[e.fold].push(e);
        }
        folds
    }

    /// Same scores re-labelled at a new threshold; fallback patients stay
    /// non-fallers.
    pub fn with_threshold(&self, threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(invalid(format!("threshold {threshold} outside [0, 1]")));
        }
        let entries = self
            .entries
            .iter()
            .map(|e| Prediction {
                predicted: !e.fallback_used && e.score > threshold,
                ..e.clone()
            })
            .collect();
        Ok(Self { threshold, entries })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                e.id,
                e.fold,
                Outcome::from_faller(e.truth),
                e.score,
                Outcome::from_faller(e.predicted),
                e.fallback_used
            );
        }
        out
    }

    /// Parse the CSV written by [`PredictionSet::to_csv`]. The threshold is
    /// not stored in the file and is set to `threshold`.
    pub fn from_csv(text: &str, threshold: f64) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if header.join(",") != HEADER {
            return Err(Error::Parse {
                row: 1,
                column: String::new(),
                message: format!("expected header {HEADER}"),
            });
        }
        let mut entries = Vec::new();
        let mut seen = BTreeMap::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let row = i + 2;
            let err = |column: &str, message: String| Error::Parse {
                row,
                column: column.to_string(),
                message,
            };
            let field = |j: usize| rec.get(j).unwrap_or("");
            let outcome = |j: usize, name: &str| {
                field(j).parse::<Outcome>().map_err(|e| err(name, e.to_string()))
            };
            let id = field(0).to_string();
            if seen.insert(id.clone(), ()).is_some() {
                return Err(err("id", format!("duplicate id {id}")));
            }
            entries.push(Prediction {
                fold: field(1).parse().map_err(|_| err("fold", format!("bad fold {:?}", field(1))))?,
                truth: outcome(2, "truth")?.is_faller(),
                score: field(3)
                    .parse()
                    .map_err(|_| err("score", format!("bad score {:?}", field(3))))?,
                predicted: outcome(4, "predicted")?.is_faller(),
                fallback_used: field(5)
                    .parse()
                    .map_err(|_| err("fallback_used", format!("bad flag {:?}", field(5))))?,
                id,
            });
        }
        Ok(Self { threshold, entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let set = PredictionSet {
            threshold: 0.5,
            entries: vec![
                Prediction {
                    id: "a".into(),
                    fold: 1,
                    truth: true,
                    score: 0.1 + 0.2,
                    predicted: false,
                    fallback_used: false,
                },
                Prediction {
                    id: "b".into(),
                    fold: 0,
                    truth: false,
                    score: 0.0,
                    predicted: false,
                    fallback_used: true,
                },
            ],
        };
        let back = PredictionSet::from_csv(&set.to_csv(), 0.5).unwrap();
        assert_eq!(back, set);
        assert_eq!(set.by_fold()[0][0].id, "b");
    }

    #[test]
    fn rethresholding_keeps_fallback_negative() {
        let set = PredictionSet {
            threshold: 0.5,
            entries: vec![Prediction {
                id: "a".into(),
                fold: 0,
                truth: true,
                score: 0.0,
                predicted: false,
                fallback_used: true,
            }],
        };
        assert!(!set.with_threshold(0.0).unwrap().entries[0].predicted);
        assert!(set.with_threshold(1.2).is_err());
    }
}
