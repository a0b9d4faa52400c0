//! Metrics, strategy comparisons, ROC analysis and reporting over
//! out-of-fold prediction sets.

mod compare;
mod metrics;
mod report;
mod roc;
mod threshold;

pub use compare::{compare_strategies, paired_pseudosamples};
pub use metrics::{
    confusion, metrics, metrics_with_se, metrics_with_se_mode, Aggregation, ConfusionMatrix,
    Metric, MetricReport, MetricValue,
};
pub use report::{emit_report, format_cell, ReportRow, REPORT_HEADER};
pub use roc::{roc, roc_bands, GridBand, RocCurve, RocPoint, TPR_GRID_STEPS};
pub use threshold::{tune_threshold, ThresholdChoice, ThresholdObjective};
