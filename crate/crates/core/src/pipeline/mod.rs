//! Cross-validation harness: shared stratified folds, training-only
//! normalization, nested grid tuning and out-of-fold prediction.

mod folds;
mod normalize;
mod predictions;
mod strategy;
mod tuning;

pub use folds::{make_fold_plan, stratified_assignment, FoldPlan};
pub use normalize::Normalizer;
pub use predictions::{Prediction, PredictionSet};
pub use strategy::{
    run_strategy, run_strategy_audited, Fallback, FoldAudit, PredictionStrategy,
    DEFAULT_THRESHOLD,
};
pub use tuning::{tune, TuningGrid, INNER_FOLDS};
