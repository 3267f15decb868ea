use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::tensor::{Dims, Tensor4};

use super::{check_input, BlackBoxModel, Label};

/// Bands of the score `s = <weight, x>` cut by strictly increasing thresholds.
///
/// Class `0` is `s <= t[0]`, class `i` is `t[i-1] < s <= t[i]`, and the last
/// class is `s > t[k-1]`; a score sitting exactly on a threshold goes to the
/// lower class id.
#[derive(Clone, Debug)]
pub struct LinearThresholdModel<S> {
    weight: Tensor4<S>,
    thresholds: Vec<S>,
    queries: u64,
}

impl<S: Scalar> LinearThresholdModel<S> {
    pub fn new(weight: Tensor4<S>, thresholds: Vec<S>) -> Result<Self> {
        if thresholds.is_empty() {
            return invalid("at least one threshold is required");
        }
        if thresholds.iter().any(|t| !t.is_finite()) {
            return invalid("thresholds must be finite");
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("thresholds must be strictly increasing");
        }
        Ok(Self { weight, thresholds, queries: 0 })
    }

    pub fn weight(&self) -> &Tensor4<S> {
        &self.weight
    }

    pub fn thresholds(&self) -> &[S] {
        &self.thresholds
    }

    fn band(&self, score: S) -> usize {
        self.thresholds.iter().take_while(|&&t| t < score).count()
    }

    /// Closed-form smallest `lambda >= 0` at which `x + lambda * d` changes
    /// band, or `None` when the score moves away from every boundary.
    ///
    /// Does not count as a query. `d` must have unit Frobenius norm.
    pub fn analytic_boundary_distance(&self, x: &Tensor4<S>, d: &Tensor4<S>) -> Result<Option<S>> {
        check_input(self.weight.dims(), x.dims())?;
        check_input(self.weight.dims(), d.dims())?;
        let tol = S::of(1e-12f64.max(16.0 * S::EPS));
        if (d.frobenius_norm() - S::one()).abs() > tol {
            return invalid("direction must have unit Frobenius norm");
        }
        let s0 = self.weight.inner(x)?;
        let rate = self.weight.inner(d)?;
        let class = self.band(s0);
        let lambda = if rate < S::zero() {
            // Reaching t[class-1] exactly already lands in the lower band.
            (class > 0).then(|| (s0 - self.thresholds[class - 1]) / -rate)
        } else if rate > S::zero() {
            (class < self.thresholds.len()).then(|| (self.thresholds[class] - s0) / rate)
        } else {
            None
        };
        Ok(lambda)
    }
}

impl<S: Scalar> BlackBoxModel<S> for LinearThresholdModel<S> {
    fn input_dims(&self) -> Dims {
        self.weight.dims()
    }

    fn num_classes(&self) -> Option<usize> {
        Some(self.thresholds.len() + 1)
    }

    fn query_count(&self) -> u64 {
        self.queries
    }

    fn predict(&mut self, x: &Tensor4<S>) -> Result<Label> {
        check_input(self.weight.dims(), x.dims())?;
        let score = self.weight.inner(x)?;
        self.queries += 1;
        Ok(Label(self.band(score) as u32))
    }
}
