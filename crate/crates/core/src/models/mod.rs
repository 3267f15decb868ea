//! Hard-label black-box classifiers.
//!
//! A model answers one question per query: the top-1 class of a tensor. No
//! scores or probabilities cross this interface.

mod centroid;
mod linear;
mod subprocess;

pub use centroid::CentroidModel;
pub use linear::LinearThresholdModel;
pub use subprocess::{SubprocessModel, DEFAULT_QUERY_TIMEOUT};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::tensor::{Dims, Tensor4};

/// Class id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub u32);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Hard-label oracle with a query counter.
///
/// `predict` must be deterministic and must bump `query_count` by exactly one
/// per answered query. Inputs with the wrong dims are rejected without
/// counting.
pub trait BlackBoxModel<S: Scalar> {
    fn input_dims(&self) -> Dims;

    /// Declared class count, if the model knows it.
    fn num_classes(&self) -> Option<usize>;

    fn query_count(&self) -> u64;

    fn predict(&mut self, x: &Tensor4<S>) -> Result<Label>;
}

impl<S: Scalar, M: BlackBoxModel<S> + ?Sized> BlackBoxModel<S> for Box<M> {
    fn input_dims(&self) -> Dims {
        (**self).input_dims()
    }

    fn num_classes(&self) -> Option<usize> {
        (**self).num_classes()
    }

    fn query_count(&self) -> u64 {
        (**self).query_count()
    }

    fn predict(&mut self, x: &Tensor4<S>) -> Result<Label> {
        (**self).predict(x)
    }
}

pub(crate) fn check_input(expected: Dims, x_dims: Dims) -> Result<()> {
    if expected != x_dims {
        return invalid(format!("model expects dims {expected:?}, got {x_dims:?}"));
    }
    Ok(())
}
