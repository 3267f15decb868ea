use rand::Rng;

use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::tensor::{hosvd, Tensor4};

use super::factors::{FactorSet, Term};
use super::{AttackConfig, InitMode};

#[derive(Clone, Debug)]
pub struct InitTheta<S> {
    pub theta: FactorSet<S>,
    /// HOSVD initialization was requested but the input was degenerate, so
    /// Gaussian factors were drawn instead.
    pub fallback: bool,
}

/// Starting factor set.
///
/// `hosvd-column` takes `θ⁽ʲ⁾ = u_qⱼ⁽ʲ⁾` from the HOSVD of `x` (term `i` of a
/// rank-`l` set uses column `qⱼ + i`, wrapping around the mode extent);
/// `gaussian` draws i.i.d. standard normal entries.
pub fn init_theta<S: Scalar, R: Rng + ?Sized>(x: &Tensor4<S>, cfg: &AttackConfig, rng: &mut R) -> Result<InitTheta<S>> {
    let dims = x.dims();
    match cfg.init {
        InitMode::Gaussian => Ok(InitTheta { theta: FactorSet::gaussian(dims, cfg.rank, rng)?, fallback: false }),
        InitMode::HosvdColumn { q } => {
            for j in 0..4 {
                if q[j] == 0 || q[j] > dims[j] {
                    return invalid(format!("init index q{} = {} outside 1..={}", j + 1, q[j], dims[j]));
                }
            }
            if x.max_abs() == S::zero() {
                log::warn!("zero input: HOSVD initialization falls back to Gaussian factors");
                return Ok(InitTheta { theta: FactorSet::gaussian(dims, cfg.rank, rng)?, fallback: true });
            }
            let h = hosvd(x, None)?;
            let terms: Vec<Term<S>> =
                (0..cfg.rank).map(|i| std::array::from_fn(|j| h.factors[j].column((q[j] - 1 + i) % dims[j]))).collect();
            Ok(InitTheta { theta: FactorSet::new(terms)?, fallback: false })
        }
    }
}
