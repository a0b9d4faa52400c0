//! Descriptive, inferential and resampling statistics.

mod resample;
pub mod special;
mod summary;

pub use resample::{
    bootstrap_percentile, jackknife, jackknife_pseudosamples, jackknife_se,
    jackknife_variance, Jackknife,
};
pub use summary::{mean, quantile_sorted, sample_variance, six_number_summary, SixNumberSummary};
pub use tests::{
    chi_squared_2x2, welch_t_test, wilcoxon_signed_rank, wilcoxon_signed_rank_with, TestResult,
    WilcoxonMethod, EXACT_WILCOXON_MAX_N,
};
