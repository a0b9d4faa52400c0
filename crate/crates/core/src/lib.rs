//! Benchmarking engine for binary fall-risk prediction.
//!
//! The crate is organised bottom-up:
//!
//! * [`cohort`] holds patient records, variable sets and CSV ingestion.
//! * [`stats`] provides the resampling and inferential statistics.
//! * [`learners`] implements the nine model families behind one interface.
//! * [`pipeline`] runs prediction strategies under shared stratified folds.
//! * [`eval`] turns out-of-fold predictions into metrics, tests and ROC data.
//! * [`synth`] generates quantile-matched synthetic cohorts.

pub mod cohort;
pub mod error;
pub mod eval;
pub mod learners;
pub mod matrix;
pub mod pipeline;
pub mod seed;
pub mod stats;
pub mod synth;

pub use cohort::{Cohort, Outcome, PatientRecord, VariableCatalog, VariableSet};
pub use error::{Error, Result};
pub use eval::{ConfusionMatrix, Metric, MetricReport, MetricValue, RocCurve};
pub use learners::{Family, FittedModel, ModelSpec};
pub use matrix::Matrix;
pub use pipeline::{
    Fallback, FoldPlan, Normalizer, PredictionSet, PredictionStrategy, TuningGrid,
};
pub use stats::{SixNumberSummary, TestResult};
pub use synth::CohortSpec;
