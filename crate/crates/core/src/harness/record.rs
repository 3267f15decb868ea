use serde::{Deserialize, Serialize};

use crate::attack::{AttackConfig, AttackResult, FactorSet, Losses, Method, Termination, TrajectoryPoint};
use crate::models::Label;

/// Everything in an [`AttackResult`] except the tensors, for JSON output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub method: Method,
    pub original_label: Label,
    pub adversarial_label: Option<Label>,
    pub success: bool,
    pub queries_used: u64,
    pub g_star: Option<f64>,
    pub theta_star: Option<FactorSet<f64>>,
    pub losses: Option<Losses>,
    pub termination: Termination,
    pub restarts: u32,
    pub init_fallback: bool,
    pub parameter_count: usize,
    pub final_beta: f64,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl From<&AttackResult<f64>> for ResultRecord {
    fn from(r: &AttackResult<f64>) -> Self {
        Self {
            method: r.method,
            original_label: r.original_label,
            adversarial_label: r.adversarial_label,
            success: r.success,
            queries_used: r.queries_used,
            g_star: r.g_star,
            theta_star: r.theta_star.clone(),
            losses: r.losses,
            termination: r.termination,
            restarts: r.restarts,
            init_fallback: r.init_fallback,
            parameter_count: r.parameter_count,
            final_beta: r.final_beta,
            trajectory: r.trajectory.clone(),
        }
    }
}

/// One attack on one sample, as stored next to its tensors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackRecord {
    pub sample: usize,
    pub attack: String,
    pub config: AttackConfig,
    /// Label of the clean sample from a separate model instance.
    pub true_label: Option<Label>,
    /// Queries seen by this attack's model instance (equals `queries_used`).
    pub model_queries: u64,
    /// File name of the adversarial tensor, relative to the sample directory.
    pub adversarial_file: Option<String>,
    pub result: Option<ResultRecord>,
    pub error: Option<String>,
}
