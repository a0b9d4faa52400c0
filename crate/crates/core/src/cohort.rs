//! Patient cohorts, variable sets and the cohort CSV format.
//!
//! The CSV layout is `patient_id,outcome,<variable>...` with outcome cells
//! `faller` / `non_faller` and decimal feature cells. An empty cell (or
//! `NA` on input) marks a missing value.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::Matrix;

pub const ID_COLUMN: &str = "patient_id";
pub const OUTCOME_COLUMN: &str = "outcome";
/// Group assigned to variables the catalog does not know about.
pub const UNGROUPED: &str = "Ungrouped";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Faller,
    NonFaller,
}

impl Outcome {
    pub fn is_faller(self) -> bool {
        self == Outcome::Faller
    }

    pub fn from_faller(faller: bool) -> Self {
        if faller {
            Outcome::Faller
        } else {
            Outcome::NonFaller
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Faller => "faller",
            Outcome::NonFaller => "non_faller",
        })
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "faller" => Ok(Outcome::Faller),
            "non_faller" => Ok(Outcome::NonFaller),
            other => Err(invalid(format!("unknown outcome token {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub id: String,
    pub outcome: Outcome,
    pub features: BTreeMap<String, Option<f64>>,
}

impl PatientRecord {
    pub fn value(&self, variable: &str) -> Option<f64> {
        self.features.get(variable).copied().flatten()
    }
}

/// True iff every variable of `vs` is present in `record`.
pub fn completeness(record: &PatientRecord, vs: &VariableSet) -> bool {
    vs.variables.iter().all(|v| record.value(v).is_some())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSet {
    pub name: String,
    pub variables: Vec<String>,
}

impl VariableSet {
    pub fn new(name: impl Into<String>, variables: Vec<String>) -> Result<Self> {
        let vs = Self { name: name.into(), variables };
        if vs.variables.is_empty() {
            return Err(invalid(format!("variable set {} is empty", vs.name)));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = vs.variables.iter().find(|v| !seen.insert(v.as_str())) {
            return Err(invalid(format!("variable set {} repeats {dup}", vs.name)));
        }
        Ok(vs)
    }

    /// Check that every variable exists in the cohort schema.
    pub fn validate_for(&self, cohort: &Cohort) -> Result<()> {
        for v in &self.variables {
            if !cohort.has_variable(v) {
                return Err(invalid(format!(
                    "variable set {} refers to {v}, which the cohort does not have",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableGroup {
    pub name: String,
    pub variables: Vec<String>,
}

/// Variable groups plus named variable sets, loadable from JSON.
///
/// A set may list group names as well as variable names; groups expand to
/// their members in catalog order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableCatalog {
    pub groups: Vec<VariableGroup>,
    /// Set name → members (variables or group names).
    pub sets: BTreeMap<String, Vec<String>>,
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

impl Default for VariableCatalog {
    fn default() -> Self {
        let groups = vec![
            VariableGroup {
                name: "Demographics".into(),
                variables: names(&["sex_male", "age", "education_years", "ethnicity_white"]),
            },
            VariableGroup {
                name: "History".into(),
                variables: names(&[
                    "theatre_last_month",
                    "fallen_last_month",
                    "function_change_last_month",
                ]),
            },
            VariableGroup {
                name: "Trail".into(),
                variables: names(&[
                    "trail_a_time",
                    "trail_a_errors",
                    "trail_b_time",
                    "trail_b_errors",
                    "trail_b_a_ratio",
                ]),
            },
            VariableGroup {
                name: "Stroop".into(),
                variables: names(&[
                    "stroop_words_1min",
                    "stroop_words_2min",
                    "stroop_word_errors",
                    "stroop_word_corrections",
                    "stroop_colours_1min",
                    "stroop_colours_2min",
                    "stroop_colour_errors",
                    "stroop_colour_corrections",
                ]),
            },
            VariableGroup {
                name: "Semantic".into(),
                variables: names(&["semantic_animals", "semantic_repetitions"]),
            },
            VariableGroup {
                name: "Walk12".into(),
                variables: (1..=12).map(|q| format!("walk12_q{q}")).collect(),
            },
        ];
        let mut sets = BTreeMap::new();
        for g in &groups {
            sets.insert(g.name.clone(), vec![g.name.clone()]);
        }
        for other in ["Demographics", "Stroop", "Semantic", "Walk12"] {
            sets.insert(format!("Trail+{other}"), names(&["Trail", other]));
        }
        sets.insert(
            "AllVariables".into(),
            groups.iter().map(|g| g.name.clone()).collect(),
        );
        Self { groups, sets }
    }
}

impl VariableCatalog {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn group_of(&self, variable: &str) -> Option<&str> {
        self.groups
            .iter()
            .find(|g| g.variables.iter().any(|v| v == variable))
            .map(|g| g.name.as_str())
    }

    pub fn group(&self, name: &str) -> Option<&VariableGroup> {
        self.groups.iter().find(|g| g.name == name)
    }

    /// Resolve a named set, expanding group names.
    pub fn set(&self, name: &str) -> Result<VariableSet> {
        let members = self
            .sets
            .get(name)
            .ok_or_else(|| invalid(format!("unknown variable set {name}")))?;
        let mut variables = Vec::new();
        for m in members {
            match self.group(m) {
                Some(g) => variables.extend(g.variables.iter().cloned()),
                None => variables.push(m.clone()),
            }
        }
        VariableSet::new(name, variables)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub group: String,
}

/// An immutable collection of patient records sharing one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    records: Vec<PatientRecord>,
    schema: Vec<Variable>,
}

impl Cohort {
    pub fn new(records: Vec<PatientRecord>, schema: Vec<Variable>) -> Result<Self> {
        let mut seen_vars = HashSet::new();
        for v in &schema {
            if !seen_vars.insert(v.name.as_str()) {
                return Err(invalid(format!("variable {} appears twice", v.name)));
            }
        }
        let mut seen_ids = HashSet::new();
        for r in &records {
            if !seen_ids.insert(r.id.as_str()) {
                return Err(invalid(format!("duplicate patient_id {}", r.id)));
            }
            if r.features.len() != schema.len()
                || !schema.iter().all(|v| r.features.contains_key(&v.name))
            {
                return Err(invalid(format!("record {} does not match the cohort schema", r.id)));
            }
        }
        Ok(Self { records, schema })
    }

    pub fn records(&self) -> &[PatientRecord] {
        &self.records
    }

    pub fn schema(&self) -> &[Variable] {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_variable(&self, name: &str) -> bool {
        self.schema.iter().any(|v| v.name == name)
    }

    pub fn group_map(&self) -> BTreeMap<&str, &str> {
        self.schema.iter().map(|v| (v.name.as_str(), v.group.as_str())).collect()
    }

    pub fn n_fallers(&self) -> usize {
        self.records.iter().filter(|r| r.outcome.is_faller()).count()
    }

    pub fn prevalence(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.n_fallers() as f64 / self.records.len() as f64
    }

    pub fn labels(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.outcome.is_faller()).collect()
    }

    /// Sub-cohort of the records at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Cohort {
        Cohort {
            records: idx.iter().map(|&i| self.records[i].clone()).collect(),
            schema: self.schema.clone(),
        }
    }

    /// Feature matrix of `vs` for the records at `idx`.
    ///
    /// Fails if any requested value is missing.
    pub fn matrix(&self, vs: &VariableSet, idx: &[usize]) -> Result<Matrix> {
        let mut data = Vec::with_capacity(idx.len() * vs.variables.len());
        for &i in idx {
            let r = &self.records[i];
            for v in &vs.variables {
                data.push(r.value(v).ok_or_else(|| {
                    invalid(format!("patient {} is missing {v}", r.id))
                })?);
            }
        }
        Matrix::new(idx.len(), vs.variables.len(), data)
    }

    /// Values of one variable with their outcomes, skipping missing cells.
    pub fn column(&self, variable: &str) -> Vec<(f64, Outcome)> {
        self.records
            .iter()
            .filter_map(|r| r.value(variable).map(|v| (v, r.outcome)))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(ID_COLUMN);
        out.push(',');
        out.push_str(OUTCOME_COLUMN);
        for v in &self.schema {
            out.push(',');
            out.push_str(&v.name);
        }
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.id);
            out.push(',');
            out.push_str(&r.outcome.to_string());
            for v in &self.schema {
                out.push(',');
                if let Some(x) = r.value(&v.name) {
                    out.push_str(&x.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Parse a cohort CSV, tagging variables with the builtin catalog's groups.
pub fn parse_cohort(csv_text: &str) -> Result<Cohort> {
    parse_cohort_with(csv_text, &VariableCatalog::default())
}

pub fn parse_cohort_with(csv_text: &str, catalog: &VariableCatalog) -> Result<Cohort> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 || header[0] != ID_COLUMN || header[1] != OUTCOME_COLUMN {
        return Err(Error::Parse {
            row: 1,
            column: header.first().cloned().unwrap_or_default(),
            message: format!("header must start with {ID_COLUMN},{OUTCOME_COLUMN}"),
        });
    }
    let schema: Vec<Variable> = header[2..]
        .iter()
        .map(|name| Variable {
            name: name.clone(),
            group: catalog.group_of(name).unwrap_or(UNGROUPED).to_string(),
        })
        .collect();

    let mut records = Vec::new();
    let mut ids = HashSet::new();
    for (i, row) in reader.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let row = row?;
        let id = row.get(0).unwrap_or_default().to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                row: line,
                column: ID_COLUMN.into(),
                message: "empty patient_id".into(),
            });
        }
        if !ids.insert(id.clone()) {
            return Err(Error::Parse {
                row: line,
                column: ID_COLUMN.into(),
                message: format!("duplicate patient_id {id}"),
            });
        }
        let outcome = row.get(1).unwrap_or_default().parse::<Outcome>().map_err(|e| {
            Error::Parse { row: line, column: OUTCOME_COLUMN.into(), message: e.to_string() }
        })?;
        let mut features = BTreeMap::new();
        for (var, cell) in schema.iter().zip(row.iter().skip(2)) {
            let value = if cell.is_empty() || cell == "NA" {
                None
            } else {
                let x: f64 = cell.parse().map_err(|_| Error::Parse {
                    row: line,
                    column: var.name.clone(),
                    message: format!("malformed number {cell:?}"),
                })?;
                if !x.is_finite() {
                    return Err(Error::Parse {
                        row: line,
                        column: var.name.clone(),
                        message: format!("non-finite number {cell:?}"),
                    });
                }
                Some(x)
            };
            features.insert(var.name.clone(), value);
        }
        records.push(PatientRecord { id, outcome, features });
    }
    Cohort::new(records, schema)
}

/// Records complete on `vs`, in their original order.
pub fn select_complete(cohort: &Cohort, vs: &VariableSet) -> Result<Cohort> {
    vs.validate_for(cohort)?;
    let idx: Vec<usize> = cohort
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| completeness(r, vs))
        .map(|(i, _)| i)
        .collect();
    if idx.is_empty() {
        return Err(Error::EmptyPopulation(format!(
            "no record is complete on variable set {}",
            vs.name
        )));
    }
    Ok(cohort.subset(&idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trail() -> VariableSet {
        VariableCatalog::default().set("Trail").unwrap()
    }

    const SMALL: &str = "patient_id,outcome,trail_a_time,trail_b_time\n\
                         p1,faller,80.5,200\n\
                         p2,non_faller,30,90\n";

    #[test]
    fn two_rows_half_prevalence() {
        let c = parse_cohort(SMALL).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.prevalence(), 0.5);
        assert_eq!(c.records()[0].value("trail_a_time"), Some(80.5));
        assert_eq!(c.group_map()["trail_b_time"], "Trail");
    }

    #[test]
    fn empty_cell_is_missing_and_breaks_completeness() {
        let text = "patient_id,outcome,trail_a_time,trail_a_errors,trail_b_time,trail_b_errors,trail_b_a_ratio,age\n\
                    a,faller,,1,100,2,3.1,40\n\
                    b,non_faller,30,0,90,NA,3,\n\
                    c,non_faller,35,0,80,1,2.2,\n";
        let c = parse_cohort(text).unwrap();
        assert_eq!(c.records()[0].value("trail_a_time"), None);
        assert!(!completeness(&c.records()[0], &trail()));
        assert!(!completeness(&c.records()[1], &trail()));
        // age is missing but outside the set
        assert!(completeness(&c.records()[2], &trail()));
        let complete = select_complete(&c, &trail()).unwrap();
        assert_eq!(complete.len(), 1);
        assert_eq!(complete.records()[0].id, "c");
    }

    #[test]
    fn three_records_one_incomplete() {
        let text = "patient_id,outcome,trail_a_time,trail_a_errors,trail_b_time,trail_b_errors,trail_b_a_ratio\n\
                    a,faller,50,1,100,2,2\n\
                    b,non_faller,30,0,90,,3\n\
                    c,non_faller,35,0,80,1,2.2\n";
        let c = parse_cohort(text).unwrap();
        let ids: Vec<_> = select_complete(&c, &trail()).unwrap().records().iter().map(|r| r.id.clone()).collect();
        assert_eq!(ids, ["a", "c"]);
    }

    #[test]
    fn complete_cohort_is_unchanged() {
        let c = parse_cohort(SMALL).unwrap();
        let vs = VariableSet::new("ab", vec!["trail_a_time".into(), "trail_b_time".into()]).unwrap();
        assert_eq!(select_complete(&c, &vs).unwrap(), c);
    }

    #[test]
    fn parse_errors_name_row_and_column() {
        let bad_number = "patient_id,outcome,age\np1,faller,4x\n";
        match parse_cohort(bad_number) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "age");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_cohort("patient_id,outcome,age\np1,maybe,4\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_cohort("patient_id,outcome,age\np1,faller,4\np1,faller,5\n"),
            Err(Error::Parse { row: 3, .. })
        ));
        assert!(parse_cohort("id,outcome,age\np1,faller,4\n").is_err());
    }

    #[test]
    fn empty_population_is_an_error() {
        let text = "patient_id,outcome,age\np1,faller,\n";
        let c = parse_cohort(text).unwrap();
        let vs = VariableSet::new("age", vec!["age".into()]).unwrap();
        assert!(matches!(select_complete(&c, &vs), Err(Error::EmptyPopulation(_))));
        let unknown = VariableSet::new("x", vec!["nope".into()]).unwrap();
        assert!(select_complete(&c, &unknown).is_err());
    }

    #[test]
    fn variable_set_validation() {
        assert!(VariableSet::new("e", vec![]).is_err());
        assert!(VariableSet::new("d", vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn builtin_sets() {
        let cat = VariableCatalog::default();
        for name in [
            "Demographics", "Stroop", "Trail", "Semantic", "Walk12", "History",
            "Trail+Demographics", "Trail+Stroop", "Trail+Semantic", "Trail+Walk12", "AllVariables",
        ] {
            cat.set(name).unwrap();
        }
        assert!(!cat.set("Demographics").unwrap().variables.iter().any(|v| v.contains("last_month")));
        let all = cat.set("AllVariables").unwrap();
        assert_eq!(all.variables.len(), 4 + 3 + 5 + 8 + 2 + 12);
        let json = serde_json::to_string(&cat).unwrap();
        assert_eq!(VariableCatalog::from_json(&json).unwrap(), cat);
    }

    fn arb_cohort() -> impl Strategy<Value = Cohort> {
        let row = (any::<bool>(), proptest::collection::vec(proptest::option::weighted(0.8, -1e4f64..1e4), 4));
        proptest::collection::vec(row, 1..30).prop_map(|rows| {
            let vars = ["v0", "v1", "v2", "v3"];
            let schema = vars
                .iter()
                .map(|v| Variable { name: v.to_string(), group: UNGROUPED.into() })
                .collect();
            let records = rows
                .into_iter()
                .enumerate()
                .map(|(i, (f, vals))| PatientRecord {
                    id: format!("p{i}"),
                    outcome: Outcome::from_faller(f),
                    features: vars.iter().map(|v| v.to_string()).zip(vals).collect(),
                })
                .collect();
            Cohort::new(records, schema).unwrap()
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip(c in arb_cohort()) {
            let again = parse_cohort(&c.to_csv()).unwrap();
            prop_assert_eq!(&again, &c);
            prop_assert_eq!(parse_cohort(&again.to_csv()).unwrap(), c);
        }

        #[test]
        fn select_complete_idempotent_and_monotone(c in arb_cohort()) {
            let a = VariableSet::new("a", vec!["v0".into(), "v1".into()]).unwrap();
            let ab = VariableSet::new("ab", vec!["v0".into(), "v1".into(), "v2".into()]).unwrap();
            if let Ok(once) = select_complete(&c, &a) {
                prop_assert_eq!(select_complete(&once, &a).unwrap(), once.clone());
                if let Ok(bigger) = select_complete(&c, &ab) {
                    let ids: HashSet<_> = once.records().iter().map(|r| &r.id).collect();
                    prop_assert!(bigger.records().iter().all(|r| ids.contains(&r.id)));
                }
            } else {
                prop_assert!(select_complete(&c, &ab).is_err());
            }
            prop_assert!((0.0..=1.0).contains(&c.prevalence()));
        }
    }
}
