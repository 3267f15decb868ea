//! Hard-label attacks: the low-rank factor attack and the full-space baseline.

mod boundary;
mod config;
mod factors;
mod gradient;
mod init;
mod solver;

use serde::{Deserialize, Serialize};

use crate::models::Label;
use crate::tensor::Tensor4;

pub use boundary::{g_eval, Boundary, GEval, LineSearch, MAX_DOWN_STEPS};
pub use config::{AttackConfig, GradMode, InitMode};
pub use factors::{assemble_direction, loss_values, norm2, FactorSet, Term};
pub use gradient::{
    contract_gradient, estimate_chain_rule, estimate_full_space, estimate_per_factor, grad_chain_rule, grad_per_factor,
    FactorGradient, GradientEstimate, UNINFORMATIVE_DIFF,
};
pub use init::{init_theta, InitTheta};
pub use solver::{
    dominant_rank_one, opt_attack_baseline, tenad_attack, MAX_HALVINGS, MAX_RESTARTS, REJECTIONS_BEFORE_DECAY,
    STAGNATION_REL_TOL, STAGNATION_WINDOW,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tenad,
    Baseline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Tenad => "tenad",
            Method::Baseline => "baseline",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "tenad" => Ok(Method::Tenad),
            "baseline" => Ok(Method::Baseline),
            other => Err(crate::Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// Why the optimizer stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// No initial direction (including restarts) reached the boundary.
    InitialInfeasible,
    BudgetExhausted,
    BetaFloor,
    Stagnation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iteration: u32,
    /// Current best boundary distance.
    pub g: f64,
    /// Queries used so far.
    pub queries: u64,
    pub accepted: bool,
}

/// Losses of the final perturbation factors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Losses {
    /// `Σᵢ ∏ⱼ‖θᵢ⁽ʲ⁾‖²`.
    pub frobenius: f64,
    /// `Σᵢ Σⱼ‖θᵢ⁽ʲ⁾‖²`.
    pub mode_sum: f64,
}

#[derive(Clone, Debug)]
pub struct AttackResult<S> {
    pub method: Method,
    pub original_label: Label,
    /// Label of `adversarial` from the confirming query; `None` if the attack
    /// never found a boundary.
    pub adversarial_label: Option<Label>,
    /// `x + g* d*`, optionally clamped; the clean input when nothing was found.
    pub adversarial: Tensor4<S>,
    pub g_star: Option<S>,
    /// Factors whose outer-product sum is the perturbation (low-rank attack only).
    pub theta_star: Option<FactorSet<S>>,
    pub losses: Option<Losses>,
    pub queries_used: u64,
    pub success: bool,
    pub trajectory: Vec<TrajectoryPoint>,
    pub termination: Termination,
    pub restarts: u32,
    pub init_fallback: bool,
    /// Number of optimized scalars.
    pub parameter_count: usize,
    pub final_beta: f64,
}

impl<S: crate::Scalar> AttackResult<S> {
    /// `adversarial - x`.
    pub fn perturbation(&self, x: &Tensor4<S>) -> crate::Result<Tensor4<S>> {
        self.adversarial.add_scaled(-S::one(), x)
    }
}

/// Runs `method` on `x`.
pub fn run_attack<S: crate::Scalar, M: crate::models::BlackBoxModel<S> + ?Sized>(
    method: Method,
    model: &mut M,
    x: &Tensor4<S>,
    cfg: &AttackConfig,
) -> crate::Result<AttackResult<S>> {
    match method {
        Method::Tenad => tenad_attack(model, x, cfg),
        Method::Baseline => opt_attack_baseline(model, x, cfg),
    }
}

/// Seed for stream `stream` derived from `master` (splitmix64 finalizer over
/// `master + (stream + 1) * golden`). Used to give every sample its own generator.
pub fn split_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
