use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor4;

/// Default threshold on `|perturbation|` for the active set.
pub const DEFAULT_ACTIVE_EPS: f64 = 1e-8;

/// A clean tensor and its adversarial counterpart.
pub type Pair<'a, S> = (&'a Tensor4<S>, &'a Tensor4<S>);

/// A metric restricted to the active set, which may turn out empty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Starred {
    pub value: f64,
    /// Nothing exceeded the activity threshold.
    pub empty: bool,
}

pub(crate) fn check_pairs<S: Scalar>(pairs: &[Pair<'_, S>]) -> Result<()> {
    if pairs.is_empty() {
        return invalid("no samples");
    }
    for (i, (clean, adv)) in pairs.iter().enumerate() {
        if clean.dims() != adv.dims() {
            return invalid(format!("sample {i}: clean {:?} vs adversarial {:?}", clean.dims(), adv.dims()));
        }
    }
    Ok(())
}

/// `(1/N) Σᵢ ‖X_adv,i − Xᵢ‖₁ / m` with `m = W·H·C·T`.
pub fn mean_absolute_perturbation<S: Scalar>(pairs: &[Pair<'_, S>]) -> Result<f64> {
    check_pairs(pairs)?;
    let total: f64 = pairs
        .iter()
        .map(|(c, a)| {
            let l1: f64 = c.data().iter().zip(a.data()).map(|(&x, &y)| (y - x).abs().as_f64()).sum();
            l1 / c.len() as f64
        })
        .sum();
    Ok(total / pairs.len() as f64)
}

/// Sum and count of `|perturbation|` over one sample's active set: frames
/// whose max-abs perturbation exceeds `eps`, and within them the entries
/// exceeding `eps`.
pub(crate) fn active_sum<S: Scalar>(clean: &Tensor4<S>, adv: &Tensor4<S>, eps: f64) -> (f64, usize) {
    let mut sum = 0.0;
    let mut count = 0;
    for t in 0..clean.dims()[3] {
        let diffs: Vec<f64> = clean.frame(t).iter().zip(adv.frame(t)).map(|(&x, &y)| (y - x).abs().as_f64()).collect();
        if !diffs.iter().any(|&d| d > eps) {
            continue;
        }
        for d in diffs.into_iter().filter(|&d| d > eps) {
            sum += d;
            count += 1;
        }
    }
    (sum, count)
}

/// MAP over the active set: per sample, the mean `|perturbation|` over active
/// entries; averaged over samples with a nonempty active set. Returns 0 and
/// the empty flag when no sample has one.
pub fn map_star<S: Scalar>(pairs: &[Pair<'_, S>], eps: f64) -> Result<Starred> {
    check_pairs(pairs)?;
    if !(eps > 0.0) {
        return invalid("activity threshold must be positive");
    }
    let mut total = 0.0;
    let mut active = 0;
    for (c, a) in pairs {
        let (sum, count) = active_sum(c, a, eps);
        if count > 0 {
            total += sum / count as f64;
            active += 1;
        }
    }
    Ok(match active {
        0 => Starred { value: 0.0, empty: true },
        n => Starred { value: total / n as f64, empty: false },
    })
}
