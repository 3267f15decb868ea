//! Evaluation metrics for adversarial examples and attack runs.

mod perturbation;
mod report;
mod ssim;

pub use perturbation::{map_star, mean_absolute_perturbation, Pair, Starred, DEFAULT_ACTIVE_EPS};
pub use report::{
    error_rank_report, fooling_rate, mean_queries, ErrorRankReport, MetricsReport, Outcome, SampleInput, SampleMetrics,
    CSV_HEADER,
};
pub use ssim::{mssim, ssim_frame, ssim_star, DEFAULT_DYNAMIC_RANGE};
