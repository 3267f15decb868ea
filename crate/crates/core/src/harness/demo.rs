use crate::error::Result;
use crate::metrics::mean_absolute_perturbation;
use crate::tensor::{multilinear_rank, RankTuple, Tensor4, DEFAULT_RANK_TOL};

#[derive(Clone, Debug, PartialEq)]
pub struct RankOneDemo {
    pub perturbed: Tensor4<f64>,
    /// Multilinear rank of `perturbed - x`.
    pub rank: RankTuple,
    /// MAP of `perturbed` against `x`.
    pub map: f64,
}

/// Adds `magnitude` times the all-ones tensor (a rank-one tensor) to `x`.
/// The rank and MAP are measured on the perturbation actually realized.
pub fn demo_rank1_constant(x: &Tensor4<f64>, magnitude: f64) -> Result<RankOneDemo> {
    let ones = Tensor4::ones(x.dims())?;
    let perturbed = x.add_scaled(magnitude, &ones)?;
    let rank = multilinear_rank(&perturbed.add_scaled(-1.0, x)?, DEFAULT_RANK_TOL)?;
    let map = mean_absolute_perturbation(&[(x, &perturbed)])?;
    log::info!("rank-one constant perturbation: rank {rank}, MAP {map}");
    Ok(RankOneDemo { perturbed, rank, map })
}
