//! Zeroth-order gradient estimates of the boundary distance.
//!
//! The estimators are written against a distance oracle closure returning
//! `Ok(None)` for an infeasible probe, so they can be driven by a model, by a
//! budgeted attack session, or by an analytic surrogate in tests.

use rand::Rng;

use crate::error::{Error, Result};
use crate::models::{BlackBoxModel, Label};
use crate::scalar::Scalar;
use crate::tensor::{contract_except, Tensor4};

use super::boundary::{Boundary, LineSearch};
use super::factors::{assemble_direction, unit_gaussian_vec, FactorSet, Term};
use super::AttackConfig;

/// Differences below this are treated as no signal.
pub const UNINFORMATIVE_DIFF: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct GradientEstimate<G> {
    pub grad: G,
    /// Probes whose perturbed direction still crossed the boundary.
    pub feasible_probes: usize,
    pub total_probes: usize,
    /// At least one feasible probe moved `g` by `UNINFORMATIVE_DIFF` or more.
    pub informative: bool,
}

pub type FactorGradient<S> = Vec<Term<S>>;

fn zero_like<S: Scalar>(theta: &FactorSet<S>) -> FactorGradient<S> {
    theta.terms().iter().map(|t| std::array::from_fn(|j| vec![S::zero(); t[j].len()])).collect()
}

/// Per-factor estimate: for every term and mode, perturb only that factor by
/// `β u` with a unit Gaussian `u` and accumulate `((g(θ̄) − g(θ)) / β) u`,
/// averaged over `probes` draws.
pub fn estimate_per_factor<S, R, F>(
    theta: &FactorSet<S>,
    g_theta: S,
    beta: S,
    probes: usize,
    rng: &mut R,
    mut g: F,
) -> Result<GradientEstimate<FactorGradient<S>>>
where
    S: Scalar,
    R: Rng + ?Sized,
    F: FnMut(&FactorSet<S>) -> Result<Option<S>>,
{
    let mut grad = zero_like(theta);
    let mut feasible = 0;
    let mut total = 0;
    let mut informative = false;
    let weight = S::one() / S::of(probes as f64);
    for _ in 0..probes {
        for i in 0..theta.rank() {
            for j in 0..4 {
                let u: Vec<S> = unit_gaussian_vec(theta.dims()[j], rng);
                let bar = theta.perturbed(i, j + 1, &u, beta)?;
                total += 1;
                let Some(g_bar) = g(&bar)? else { continue };
                feasible += 1;
                let diff = g_bar - g_theta;
                if diff.abs().as_f64() >= UNINFORMATIVE_DIFF {
                    informative = true;
                }
                let coef = weight * diff / beta;
                for (a, &b) in grad[i][j].iter_mut().zip(&u) {
                    *a += coef * b;
                }
            }
        }
    }
    if feasible == 0 {
        return Err(Error::GradientUninformative);
    }
    Ok(GradientEstimate { grad, feasible_probes: feasible, total_probes: total, informative })
}

/// Full-space estimate `∂g/∂ρ ≈ ((g(ρ + βU) − g(ρ)) / β) U` with a unit
/// Gaussian tensor `U`, averaged over `probes` draws.
pub fn estimate_full_space<S, R, F>(
    rho: &Tensor4<S>,
    g_rho: S,
    beta: S,
    probes: usize,
    rng: &mut R,
    mut g: F,
) -> Result<GradientEstimate<Tensor4<S>>>
where
    S: Scalar,
    R: Rng + ?Sized,
    F: FnMut(&Tensor4<S>) -> Result<Option<S>>,
{
    let dims = rho.dims();
    let mut acc = Tensor4::zeros(dims)?;
    let mut feasible = 0;
    let mut informative = false;
    let weight = S::one() / S::of(probes as f64);
    for _ in 0..probes {
        let u = Tensor4::new(dims, unit_gaussian_vec(rho.len(), rng))?;
        let Some(g_bar) = g(&rho.add_scaled(beta, &u)?)? else {
            continue;
        };
        feasible += 1;
        let diff = g_bar - g_rho;
        if diff.abs().as_f64() >= UNINFORMATIVE_DIFF {
            informative = true;
        }
        acc = acc.add_scaled(weight * diff / beta, &u)?;
    }
    if feasible == 0 {
        return Err(Error::GradientUninformative);
    }
    Ok(GradientEstimate { grad: acc, feasible_probes: feasible, total_probes: probes, informative })
}

/// Chain rule through `ρ = Σᵢ θᵢ⁽¹⁾∘θᵢ⁽²⁾∘θᵢ⁽³⁾∘θᵢ⁽⁴⁾`: the gradient w.r.t.
/// `θᵢ⁽ʲ⁾` is `G` contracted with the other three factors of term `i`.
pub fn contract_gradient<S: Scalar>(theta: &FactorSet<S>, g_rho: &Tensor4<S>) -> Result<FactorGradient<S>> {
    theta
        .terms()
        .iter()
        .map(|t| {
            let vs = [t[0].as_slice(), t[1].as_slice(), t[2].as_slice(), t[3].as_slice()];
            let mut out: [Vec<S>; 4] = Default::default();
            for (j, slot) in out.iter_mut().enumerate() {
                *slot = contract_except(g_rho, vs, j + 1)?;
            }
            Ok(out)
        })
        .collect()
}

/// Chain-rule estimate: one full-space probe per draw, contracted onto the
/// factors. `g` receives the (unnormalized) perturbed `ρ + βU`.
pub fn estimate_chain_rule<S, R, F>(
    theta: &FactorSet<S>,
    g_theta: S,
    beta: S,
    probes: usize,
    rng: &mut R,
    g: F,
) -> Result<GradientEstimate<FactorGradient<S>>>
where
    S: Scalar,
    R: Rng + ?Sized,
    F: FnMut(&Tensor4<S>) -> Result<Option<S>>,
{
    let rho = theta.outer_sum()?;
    let est = estimate_full_space(&rho, g_theta, beta, probes, rng, g)?;
    Ok(GradientEstimate {
        grad: contract_gradient(theta, &est.grad)?,
        feasible_probes: est.feasible_probes,
        total_probes: est.total_probes,
        informative: est.informative,
    })
}

fn model_distance<S: Scalar, M: BlackBoxModel<S> + ?Sized>(
    search: &LineSearch<S>,
    model: &mut M,
    x: &Tensor4<S>,
    direction: &Tensor4<S>,
    y: Label,
    start: S,
) -> Result<Option<S>> {
    match search.distance(model, x, direction, y, start)? {
        Boundary::Found(l) => Ok(Some(l)),
        _ => Ok(None),
    }
}

/// Per-factor estimate against a model. `g_theta` is the already measured
/// distance of `theta`; each probe's search is warm-started there. Returns the
/// estimate and the queries it consumed.
#[allow(clippy::too_many_arguments)]
pub fn grad_per_factor<S, M, R>(
    model: &mut M,
    x: &Tensor4<S>,
    theta: &FactorSet<S>,
    g_theta: S,
    beta: S,
    y: Label,
    cfg: &AttackConfig,
    rng: &mut R,
) -> Result<(GradientEstimate<FactorGradient<S>>, u64)>
where
    S: Scalar,
    M: BlackBoxModel<S> + ?Sized,
    R: Rng + ?Sized,
{
    let search = LineSearch::for_input(x, cfg);
    let before = model.query_count();
    let est = estimate_per_factor(theta, g_theta, beta, cfg.directions_per_step, rng, |bar| {
        let (d, _) = assemble_direction(bar)?;
        model_distance(&search, model, x, &d, y, g_theta)
    })?;
    Ok((est, model.query_count() - before))
}

/// Chain-rule estimate against a model; the probe direction is
/// `(ρ + βU) / ‖ρ + βU‖_F`.
#[allow(clippy::too_many_arguments)]
pub fn grad_chain_rule<S, M, R>(
    model: &mut M,
    x: &Tensor4<S>,
    theta: &FactorSet<S>,
    g_theta: S,
    beta: S,
    y: Label,
    cfg: &AttackConfig,
    rng: &mut R,
) -> Result<(GradientEstimate<FactorGradient<S>>, u64)>
where
    S: Scalar,
    M: BlackBoxModel<S> + ?Sized,
    R: Rng + ?Sized,
{
    let search = LineSearch::for_input(x, cfg);
    let before = model.query_count();
    let est = estimate_chain_rule(theta, g_theta, beta, cfg.directions_per_step, rng, |v| {
        let Some(d) = v.normalized() else {
            return Ok(None);
        };
        model_distance(&search, model, x, &d, y, g_theta)
    })?;
    Ok((est, model.query_count() - before))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn theta() -> FactorSet<f64> {
        FactorSet::rank_one(vec![1.0, 2.0], vec![0.5, -1.0, 1.0], vec![3.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn constant_distance_gives_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let est = estimate_per_factor(&theta(), 2.5, 0.05, 1, &mut rng, |_| Ok(Some(2.5))).unwrap();
        assert!(!est.informative);
        assert!(est.grad.iter().flatten().flatten().all(|&v| v == 0.0));
        assert_eq!(est.total_probes, 4);

        let rho = theta().outer_sum().unwrap();
        let est = estimate_chain_rule(&theta(), 2.5, 0.05, 3, &mut rng, |_| Ok(Some(2.5))).unwrap();
        assert!(!est.informative);
        assert!(est.grad.iter().flatten().flatten().all(|&v| v == 0.0));
        assert_eq!(est.total_probes, 3);
        assert_eq!(rho.dims(), [2, 3, 1, 2]);
    }

    #[test]
    fn all_infeasible_is_uninformative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = estimate_per_factor(&theta(), 1.0, 0.05, 2, &mut rng, |_| Ok(None));
        assert!(matches!(r, Err(Error::GradientUninformative)));
        let r = estimate_chain_rule(&theta(), 1.0, 0.05, 2, &mut rng, |_| Ok(None));
        assert!(matches!(r, Err(Error::GradientUninformative)));
    }

    #[test]
    fn per_factor_probe_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut calls = 0;
        estimate_per_factor(&theta(), 1.0, 0.05, 1, &mut rng, |_| {
            calls += 1;
            Ok(Some(1.5))
        })
        .unwrap();
        assert_eq!(calls, 4);
    }

    #[test]
    fn contraction_of_all_ones() {
        let one = vec![1.0, 1.0];
        let theta = FactorSet::rank_one(one.clone(), one.clone(), one.clone(), one).unwrap();
        let g = Tensor4::<f64>::ones([2, 2, 2, 2]).unwrap();
        let grad = contract_gradient(&theta, &g).unwrap();
        for j in 0..4 {
            assert_eq!(grad[0][j], vec![8.0, 8.0]);
        }
        let zero = Tensor4::<f64>::zeros([2, 2, 2, 2]).unwrap();
        let grad = contract_gradient(&theta, &zero).unwrap();
        assert!(grad.iter().flatten().flatten().all(|&v| v == 0.0));
    }
}
