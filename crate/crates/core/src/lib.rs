//! Low-rank hard-label black-box adversarial attacks on order-4 video tensors.
//!
//! The attack variable is a set of per-mode factor vectors whose outer product
//! gives the perturbation direction; the distance to the decision boundary along
//! that direction is minimized with zeroth-order gradient estimates that only
//! observe top-1 labels. A full-space direction attack with identical heuristics
//! serves as the baseline.
//!
//! The algebra is generic over [`Scalar`] (`f32`, `f64`); the aliases below fix
//! the double-precision types used by the harness and the CLI.

// `!(a > b)` comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod attack;
pub mod error;
pub mod harness;
pub mod kv;
pub mod metrics;
pub mod models;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision video tensor.
pub type Tensor = tensor::Tensor4<f64>;
/// Single-precision video tensor.
pub type Tensor32 = tensor::Tensor4<f32>;
pub type Matrix = tensor::Matrix<f64>;
pub type FactorSet = attack::FactorSet<f64>;
pub type AttackResult = attack::AttackResult<f64>;
pub type FactorMatrixSet = tensor::FactorMatrixSet<f64>;
