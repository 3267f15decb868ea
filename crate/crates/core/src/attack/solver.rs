//! The descent loop shared by the low-rank attack and the full-space baseline.
//!
//! Both attacks run the same procedure and differ only in how a direction is
//! parametrized: four factor vectors per term versus a dense unit tensor.
//!
//! Per iteration: estimate the gradient of the boundary distance `g`, then try
//! the step `p - α·grad` with `α` halved up to ten times until `g` strictly
//! decreases. A candidate is screened with one query at the current `g`; only
//! directions that already flip there are bisected. `β` shrinks tenfold when
//! every probe is infeasible, when no probe changes `g` by more than 1e-12, or
//! after three consecutive rejected steps. The run stops on budget exhaustion,
//! `β < β_floor`, or a relative improvement below 1e-6 over 20 accepted steps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::models::{BlackBoxModel, Label};
use crate::scalar::Scalar;
use crate::tensor::{hosvd, Tensor4};

use super::boundary::{Boundary, LineSearch};
use super::factors::{assemble_direction, loss_values, FactorSet};
use super::gradient::{
    estimate_chain_rule, estimate_full_space, estimate_per_factor, FactorGradient, GradientEstimate,
};
use super::init::init_theta;
use super::{AttackConfig, AttackResult, GradMode, InitMode, Losses, Method, Termination, TrajectoryPoint};

/// Random restarts allowed when the initial direction never flips the label.
pub const MAX_RESTARTS: u32 = 50;
/// Step-size halvings tried before a step is rejected.
pub const MAX_HALVINGS: u32 = 10;
/// Consecutive rejected steps that trigger a `β` decay.
pub const REJECTIONS_BEFORE_DECAY: u32 = 3;
pub const STAGNATION_WINDOW: usize = 20;
pub const STAGNATION_REL_TOL: f64 = 1e-6;
const BETA_DECAY: f64 = 10.0;

/// Query bookkeeping for one attack run. Every search is refused up front if
/// its worst-case cost could break the budget (one query stays reserved for
/// the final confirmation).
struct Session<'a, S: Scalar, M: ?Sized> {
    model: &'a mut M,
    x: &'a Tensor4<S>,
    y: Label,
    search: LineSearch<S>,
    budget: u64,
    start: u64,
}

impl<'a, S: Scalar, M: BlackBoxModel<S> + ?Sized> Session<'a, S, M> {
    fn used(&self) -> u64 {
        self.model.query_count() - self.start
    }

    fn ensure(&self, start: S) -> Result<()> {
        if self.used() + self.search.worst_case_queries(start) + 1 > self.budget {
            return Err(Error::BudgetExhausted);
        }
        Ok(())
    }

    fn distance(&mut self, d: &Tensor4<S>, start: S) -> Result<Boundary<S>> {
        self.ensure(start)?;
        self.search.distance(self.model, self.x, d, self.y, start)
    }

    fn distance_below(&mut self, d: &Tensor4<S>, upper: S) -> Result<Boundary<S>> {
        self.ensure(upper)?;
        self.search.distance_below(self.model, self.x, d, self.y, upper)
    }
}

/// A parametrization of the unit attack direction.
trait SearchSpace<S: Scalar> {
    type Point: Clone;
    type Grad;

    fn initial(&self, attempt: u32, rng: &mut ChaCha8Rng) -> Result<Self::Point>;

    fn direction(&self, p: &Self::Point) -> Result<Tensor4<S>>;

    /// `eval` maps a unit direction to its boundary distance (`None` when
    /// infeasible).
    fn gradient(
        &self,
        p: &Self::Point,
        g: S,
        beta: S,
        rng: &mut ChaCha8Rng,
        eval: &mut dyn FnMut(&Tensor4<S>) -> Result<Option<S>>,
    ) -> Result<GradientEstimate<Self::Grad>>;

    fn descend(&self, p: &Self::Point, grad: &Self::Grad, alpha: S) -> Option<Self::Point>;

    /// Factor representation of the final perturbation `g · direction`, if any.
    fn perturbation_factors(&self, p: &Self::Point, g: S) -> Result<Option<FactorSet<S>>>;

    fn parameter_count(&self) -> usize;
}

struct LowRankSpace<S> {
    seed_theta: FactorSet<S>,
    from_hosvd: bool,
    rank: usize,
    grad_mode: GradMode,
    probes: usize,
}

impl<S: Scalar> SearchSpace<S> for LowRankSpace<S> {
    type Point = FactorSet<S>;
    type Grad = FactorGradient<S>;

    fn initial(&self, attempt: u32, rng: &mut ChaCha8Rng) -> Result<FactorSet<S>> {
        let theta = match attempt {
            0 => self.seed_theta.clone(),
            // The mirrored direction before any random restart.
            1 if self.from_hosvd => {
                let terms = self.seed_theta.terms().iter().map(|t| {
                    let mut t = t.clone();
                    t[0].iter_mut().for_each(|v| *v = -*v);
                    t
                });
                FactorSet::new(terms.collect())?
            }
            _ => FactorSet::gaussian(self.seed_theta.dims(), self.rank, rng)?,
        };
        Ok(theta.normalized())
    }

    fn direction(&self, p: &FactorSet<S>) -> Result<Tensor4<S>> {
        Ok(assemble_direction(p)?.0)
    }

    fn gradient(
        &self,
        p: &FactorSet<S>,
        g: S,
        beta: S,
        rng: &mut ChaCha8Rng,
        eval: &mut dyn FnMut(&Tensor4<S>) -> Result<Option<S>>,
    ) -> Result<GradientEstimate<FactorGradient<S>>> {
        match self.grad_mode {
            GradMode::PerFactor => estimate_per_factor(p, g, beta, self.probes, rng, |bar| {
                let (d, _) = assemble_direction(bar)?;
                eval(&d)
            }),
            GradMode::ChainRule => estimate_chain_rule(p, g, beta, self.probes, rng, |v| match v.normalized() {
                Some(d) => eval(&d),
                None => Ok(None),
            }),
        }
    }

    fn descend(&self, p: &FactorSet<S>, grad: &FactorGradient<S>, alpha: S) -> Option<FactorSet<S>> {
        p.descend(grad, alpha).ok().map(|t| t.normalized())
    }

    fn perturbation_factors(&self, p: &FactorSet<S>, g: S) -> Result<Option<FactorSet<S>>> {
        let unit = p.normalized();
        let (_, scale) = assemble_direction(&unit)?;
        let per_factor = (g / scale).powf(S::of(0.25));
        let terms = unit
            .terms()
            .iter()
            .map(|t| std::array::from_fn(|j| t[j].iter().map(|&v| v * per_factor).collect()))
            .collect();
        Ok(Some(FactorSet::new(terms)?))
    }

    fn parameter_count(&self) -> usize {
        self.seed_theta.parameter_count()
    }
}

struct FullSpace<S> {
    seed_direction: Option<Tensor4<S>>,
    len: usize,
    dims: [usize; 4],
    probes: usize,
}

impl<S: Scalar> SearchSpace<S> for FullSpace<S> {
    type Point = Tensor4<S>;
    type Grad = Tensor4<S>;

    fn initial(&self, attempt: u32, rng: &mut ChaCha8Rng) -> Result<Tensor4<S>> {
        match (attempt, &self.seed_direction) {
            (0, Some(d)) => Ok(d.clone()),
            (1, Some(d)) => Ok(d.scaled(-S::one())),
            _ => Tensor4::new(self.dims, super::factors::unit_gaussian_vec(self.len, rng)),
        }
    }

    fn direction(&self, p: &Tensor4<S>) -> Result<Tensor4<S>> {
        Ok(p.clone())
    }

    fn gradient(
        &self,
        p: &Tensor4<S>,
        g: S,
        beta: S,
        rng: &mut ChaCha8Rng,
        eval: &mut dyn FnMut(&Tensor4<S>) -> Result<Option<S>>,
    ) -> Result<GradientEstimate<Tensor4<S>>> {
        estimate_full_space(p, g, beta, self.probes, rng, |v| match v.normalized() {
            Some(d) => eval(&d),
            None => Ok(None),
        })
    }

    fn descend(&self, p: &Tensor4<S>, grad: &Tensor4<S>, alpha: S) -> Option<Tensor4<S>> {
        p.add_scaled(-alpha, grad).ok().and_then(|t| t.normalized())
    }

    fn perturbation_factors(&self, _: &Tensor4<S>, _: S) -> Result<Option<FactorSet<S>>> {
        Ok(None)
    }

    fn parameter_count(&self) -> usize {
        self.len
    }
}

/// Low-rank attack: the direction is `Σᵢ θᵢ⁽¹⁾∘θᵢ⁽²⁾∘θᵢ⁽³⁾∘θᵢ⁽⁴⁾` (normalized) and
/// only the `l·(W+H+C+T)` factor entries are optimized.
pub fn tenad_attack<S: Scalar, M: BlackBoxModel<S> + ?Sized>(
    model: &mut M,
    x: &Tensor4<S>,
    cfg: &AttackConfig,
) -> Result<AttackResult<S>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = init_theta(x, cfg, &mut rng)?;
    let space = LowRankSpace {
        seed_theta: init.theta.normalized(),
        from_hosvd: matches!(cfg.init, InitMode::HosvdColumn { .. }) && !init.fallback,
        rank: cfg.rank,
        grad_mode: cfg.grad_mode,
        probes: cfg.directions_per_step,
    };
    let mut result = optimize(model, x, cfg, &space, &mut rng, Method::Tenad)?;
    result.init_fallback = init.fallback;
    Ok(result)
}

/// Full-space baseline: the direction is a dense unit tensor updated with the
/// directional finite-difference estimate. Shares every heuristic with
/// [`tenad_attack`]; with HOSVD initialization it also starts from the same
/// rank-one direction.
pub fn opt_attack_baseline<S: Scalar, M: BlackBoxModel<S> + ?Sized>(
    model: &mut M,
    x: &Tensor4<S>,
    cfg: &AttackConfig,
) -> Result<AttackResult<S>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut fallback = false;
    let seed_direction = match cfg.init {
        InitMode::HosvdColumn { .. } if x.max_abs() > S::zero() => {
            let init = init_theta(x, cfg, &mut rng)?;
            let (d, _) = assemble_direction(&init.theta)?;
            Some(d)
        }
        InitMode::HosvdColumn { .. } => {
            fallback = true;
            None
        }
        InitMode::Gaussian => None,
    };
    let space = FullSpace { seed_direction, len: x.len(), dims: x.dims(), probes: cfg.directions_per_step };
    let mut result = optimize(model, x, cfg, &space, &mut rng, Method::Baseline)?;
    result.init_fallback = fallback;
    Ok(result)
}

fn optimize<S, M, P>(
    model: &mut M,
    x: &Tensor4<S>,
    cfg: &AttackConfig,
    space: &P,
    rng: &mut ChaCha8Rng,
    method: Method,
) -> Result<AttackResult<S>>
where
    S: Scalar,
    M: BlackBoxModel<S> + ?Sized,
    P: SearchSpace<S>,
{
    if model.input_dims() != x.dims() {
        return invalid(format!("model expects {:?}, input is {:?}", model.input_dims(), x.dims()));
    }
    let start = model.query_count();
    let y = model.predict(x)?;
    let mut sess = Session { model, x, y, search: LineSearch::for_input(x, cfg), budget: cfg.query_budget, start };

    let mut restarts = 0;
    let mut found = None;
    let mut termination = Termination::InitialInfeasible;
    for attempt in 0..=MAX_RESTARTS {
        let p = space.initial(attempt, rng)?;
        let d = space.direction(&p)?;
        let lambda0 = sess.search.start;
        match sess.distance(&d, lambda0) {
            Ok(Boundary::Found(g)) => {
                found = Some((p, d, g));
                break;
            }
            Ok(_) => restarts += 1,
            Err(Error::BudgetExhausted) => {
                termination = Termination::BudgetExhausted;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let Some((mut p, mut dir, mut g)) = found else {
        let queries_used = sess.used();
        return Ok(AttackResult {
            method,
            original_label: y,
            adversarial_label: None,
            adversarial: x.clone(),
            g_star: None,
            theta_star: None,
            losses: None,
            queries_used,
            success: false,
            trajectory: Vec::new(),
            termination,
            restarts: restarts.min(MAX_RESTARTS),
            init_fallback: false,
            parameter_count: space.parameter_count(),
            final_beta: cfg.beta,
        });
    };

    let mut trajectory = vec![TrajectoryPoint { iteration: 0, g: g.as_f64(), queries: sess.used(), accepted: true }];
    let mut accepted_g = vec![g];
    let mut alpha = S::of(cfg.alpha);
    let mut beta = cfg.beta;
    let mut rejections = 0;
    let mut iteration = 0;
    let termination = loop {
        if beta < cfg.beta_floor {
            break Termination::BetaFloor;
        }
        iteration += 1;
        let estimate = {
            let mut eval = |d: &Tensor4<S>| -> Result<Option<S>> {
                match sess.distance(d, g)? {
                    Boundary::Found(l) => Ok(Some(l)),
                    _ => Ok(None),
                }
            };
            space.gradient(&p, g, S::of(beta), rng, &mut eval)
        };
        let estimate = match estimate {
            Ok(e) if e.informative => e,
            Ok(_) | Err(Error::GradientUninformative) => {
                beta /= BETA_DECAY;
                rejections = 0;
                trajectory.push(TrajectoryPoint { iteration, g: g.as_f64(), queries: sess.used(), accepted: false });
                continue;
            }
            Err(Error::BudgetExhausted) => break Termination::BudgetExhausted,
            Err(e) => return Err(e),
        };

        let mut step = None;
        let mut out_of_budget = false;
        let mut trial = alpha;
        for k in 0..=MAX_HALVINGS {
            if k > 0 {
                trial /= S::one() + S::one();
            }
            let Some(candidate) = space.descend(&p, &estimate.grad, trial) else {
                continue;
            };
            let d = space.direction(&candidate)?;
            match sess.distance_below(&d, g) {
                Ok(Boundary::Found(g_new)) if g_new < g => {
                    step = Some((candidate, d, g_new, k));
                    break;
                }
                Ok(_) => {}
                Err(Error::BudgetExhausted) => {
                    out_of_budget = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if out_of_budget {
            break Termination::BudgetExhausted;
        }

        match step {
            Some((candidate, d, g_new, k)) => {
                p = candidate;
                dir = d;
                g = g_new;
                alpha = if k == 0 { trial + trial } else { trial };
                rejections = 0;
                accepted_g.push(g);
                trajectory.push(TrajectoryPoint { iteration, g: g.as_f64(), queries: sess.used(), accepted: true });
                if accepted_g.len() > STAGNATION_WINDOW {
                    let old = accepted_g[accepted_g.len() - 1 - STAGNATION_WINDOW];
                    if ((old - g) / old).as_f64() < STAGNATION_REL_TOL {
                        break Termination::Stagnation;
                    }
                }
            }
            None => {
                rejections += 1;
                if rejections >= REJECTIONS_BEFORE_DECAY {
                    beta /= BETA_DECAY;
                    rejections = 0;
                }
                trajectory.push(TrajectoryPoint { iteration, g: g.as_f64(), queries: sess.used(), accepted: false });
            }
        }
    };

    let mut adversarial = x.add_scaled(g, &dir)?;
    if let Some([lo, hi]) = cfg.clamp {
        adversarial = adversarial.map(|v| v.max(S::of(lo)).min(S::of(hi)));
    }
    let confirmed = sess.model.predict(&adversarial)?;
    let queries_used = sess.used();
    debug_assert!(queries_used <= cfg.query_budget);
    let theta_star = space.perturbation_factors(&p, g)?;
    let losses = theta_star.as_ref().map(|t| {
        let (frobenius, mode_sum) = loss_values(t);
        Losses { frobenius: frobenius.as_f64(), mode_sum: mode_sum.as_f64() }
    });
    Ok(AttackResult {
        method,
        original_label: y,
        adversarial_label: Some(confirmed),
        adversarial,
        g_star: Some(g),
        theta_star,
        losses,
        queries_used,
        success: confirmed != y,
        trajectory,
        termination,
        restarts,
        init_fallback: false,
        parameter_count: space.parameter_count(),
        final_beta: beta,
    })
}

/// Leading HOSVD singular vectors of `x` as a rank-one factor set.
pub fn dominant_rank_one<S: Scalar>(x: &Tensor4<S>) -> Result<FactorSet<S>> {
    let h = hosvd(x, None)?;
    FactorSet::rank_one(h.factors[0].column(0), h.factors[1].column(0), h.factors[2].column(0), h.factors[3].column(0))
}
