//! Synthetic data, model construction, experiment orchestration and reports.

mod config;
mod dataset;
mod demo;
mod model_spec;
mod record;
mod run;

pub use config::{DatasetSpec, ExperimentConfig, MetricsSettings, NamedAttack};
pub use dataset::{generate_synthetic_dataset, DatasetKind, PIXEL_MID};
pub use demo::{demo_rank1_constant, RankOneDemo};
pub use model_spec::{DynModel, ModelSpec};
pub use record::{AttackRecord, ResultRecord};
pub use run::{
    recompute_metrics, run_experiment, sample_dir, AttackSetup, ExperimentSummary, SampleError, CLEAN_FILE,
    COMPARISON_FILE, CONFIG_FILE, SUMMARY_FILE,
};
