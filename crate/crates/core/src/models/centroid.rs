use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::tensor::{Dims, Tensor4};

use super::{check_input, BlackBoxModel, Label};

/// Nearest centroid by Frobenius distance; ties go to the lowest class id.
#[derive(Clone, Debug)]
pub struct CentroidModel<S> {
    centroids: Vec<Tensor4<S>>,
    queries: u64,
}

impl<S: Scalar> CentroidModel<S> {
    pub fn new(centroids: Vec<Tensor4<S>>) -> Result<Self> {
        if centroids.len() < 2 {
            return invalid("centroid model needs at least two centroids");
        }
        let dims = centroids[0].dims();
        if centroids.iter().any(|c| c.dims() != dims) {
            return invalid("all centroids must share dims");
        }
        Ok(Self { centroids, queries: 0 })
    }

    pub fn centroids(&self) -> &[Tensor4<S>] {
        &self.centroids
    }

    fn nearest(&self, x: &Tensor4<S>) -> usize {
        let mut best = (0, S::infinity());
        for (k, c) in self.centroids.iter().enumerate() {
            let d2: S = x.data().iter().zip(c.data()).map(|(&a, &b)| (a - b) * (a - b)).sum();
            if d2 < best.1 {
                best = (k, d2);
            }
        }
        best.0
    }
}

impl<S: Scalar> BlackBoxModel<S> for CentroidModel<S> {
    fn input_dims(&self) -> Dims {
        self.centroids[0].dims()
    }

    fn num_classes(&self) -> Option<usize> {
        Some(self.centroids.len())
    }

    fn query_count(&self) -> u64 {
        self.queries
    }

    fn predict(&mut self, x: &Tensor4<S>) -> Result<Label> {
        check_input(self.input_dims(), x.dims())?;
        self.queries += 1;
        Ok(Label(self.nearest(x) as u32))
    }
}
