//! Boundary distance along a fixed direction, measured with label queries only.

use crate::error::{invalid, Error, Result};
use crate::models::{BlackBoxModel, Label};
use crate::scalar::Scalar;
use crate::tensor::Tensor4;

use super::AttackConfig;

/// Halvings allowed when the search start already flips the label.
pub const MAX_DOWN_STEPS: u64 = 30;

/// Outcome of a line search along `x + λ d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Boundary<S> {
    /// Smallest flipping `λ` found; the true boundary lies in `[λ (1 - tol), λ]`.
    Found(S),
    /// Only for [`LineSearch::distance_below`]: the label does not flip at the
    /// upper bound, so the boundary is farther away.
    NotBelow,
    /// No flip up to the cap.
    Infeasible,
}

/// Geometric coarse search followed by bisection to relative tolerance.
#[derive(Clone, Copy, Debug)]
pub struct LineSearch<S> {
    /// Default first probe.
    pub start: S,
    pub cap: S,
    pub tol: S,
}

impl<S: Scalar> LineSearch<S> {
    /// Start `λ₀` (default `0.1 ‖x‖_F`) and cap `lambda_cap_factor · ‖x‖_F`; a
    /// zero input uses unit scale.
    pub fn for_input(x: &Tensor4<S>, cfg: &AttackConfig) -> Self {
        let norm = x.frobenius_norm().as_f64();
        let scale = if norm > 0.0 { norm } else { 1.0 };
        let start = cfg.lambda0.unwrap_or(0.1 * scale);
        let cap = cfg.lambda_cap_factor * scale;
        Self { start: S::of(start.min(cap)), cap: S::of(cap), tol: S::of(cfg.lambda_tol) }
    }

    /// Query bound for one search started at `start`:
    /// initial probe + coarse steps + bisection steps.
    pub fn worst_case_queries(&self, start: S) -> u64 {
        let start = start.min(self.cap).as_f64();
        let up = if start > 0.0 { (self.cap.as_f64() / start).log2().ceil().max(1.0) as u64 } else { 1 };
        let bisect = (1.0 / self.tol.as_f64()).log2().ceil() as u64;
        1 + up.max(MAX_DOWN_STEPS) + bisect + 1
    }

    /// Smallest flipping `λ` along the unit direction `d`, starting the coarse
    /// search at `start`.
    pub fn distance<M: BlackBoxModel<S> + ?Sized>(
        &self,
        model: &mut M,
        x: &Tensor4<S>,
        d: &Tensor4<S>,
        y: Label,
        start: S,
    ) -> Result<Boundary<S>> {
        self.run(model, x, d, y, start, false)
    }

    /// Like [`distance`](Self::distance) but answers [`Boundary::NotBelow`]
    /// after a single query when `x + upper·d` keeps the label.
    pub fn distance_below<M: BlackBoxModel<S> + ?Sized>(
        &self,
        model: &mut M,
        x: &Tensor4<S>,
        d: &Tensor4<S>,
        y: Label,
        upper: S,
    ) -> Result<Boundary<S>> {
        self.run(model, x, d, y, upper, true)
    }

    fn run<M: BlackBoxModel<S> + ?Sized>(
        &self,
        model: &mut M,
        x: &Tensor4<S>,
        d: &Tensor4<S>,
        y: Label,
        start: S,
        below_only: bool,
    ) -> Result<Boundary<S>> {
        let mut flips = |lambda: S| -> Result<bool> { Ok(model.predict(&x.add_scaled(lambda, d)?)? != y) };
        let two = S::one() + S::one();
        let start = start.min(self.cap);
        if !(start > S::zero()) {
            return invalid("line search start must be positive");
        }

        let (mut lo, mut hi);
        if flips(start)? {
            hi = start;
            lo = start / two;
            let mut down = 0;
            loop {
                if !flips(lo)? {
                    break;
                }
                hi = lo;
                down += 1;
                if down >= MAX_DOWN_STEPS {
                    // Already far below any resolution the caller asked for.
                    return Ok(Boundary::Found(hi));
                }
                lo /= two;
            }
        } else {
            if below_only {
                return Ok(Boundary::NotBelow);
            }
            lo = start;
            loop {
                if lo >= self.cap {
                    return Ok(Boundary::Infeasible);
                }
                let probe = (lo * two).min(self.cap);
                if flips(probe)? {
                    hi = probe;
                    break;
                }
                lo = probe;
            }
        }

        while hi - lo > self.tol * hi {
            let mid = (lo + hi) / two;
            if flips(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Boundary::Found(hi))
    }
}

/// Boundary distance `g` along `d` with the configured start and cap, and the
/// exact number of queries spent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GEval<S> {
    pub lambda: S,
    pub queries: u64,
}

/// Smallest `λ` with `f(x + λ d) ≠ y`, located by doubling from `λ₀` (or
/// halving, if `λ₀` already flips) and bisecting to relative `lambda_tol`.
///
/// `y` must be the model's label for `x`; it is not re-queried. Fails with
/// [`Error::DirectionInfeasible`] when no flip occurs below the cap.
pub fn g_eval<S: Scalar, M: BlackBoxModel<S> + ?Sized>(
    model: &mut M,
    x: &Tensor4<S>,
    d: &Tensor4<S>,
    y: Label,
    cfg: &AttackConfig,
) -> Result<GEval<S>> {
    let tol = 1e-10f64.max(16.0 * S::EPS);
    if (d.frobenius_norm().as_f64() - 1.0).abs() > tol {
        return invalid("direction must have unit Frobenius norm");
    }
    let search = LineSearch::for_input(x, cfg);
    let before = model.query_count();
    let outcome = search.distance(model, x, d, y, search.start)?;
    let queries = model.query_count() - before;
    match outcome {
        Boundary::Found(lambda) => Ok(GEval { lambda, queries }),
        _ => Err(Error::DirectionInfeasible { cap: search.cap.as_f64(), queries }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LinearThresholdModel;

    fn setup(rate: f64, thresholds: Vec<f64>) -> (LinearThresholdModel<f64>, Tensor4<f64>, Tensor4<f64>) {
        // w = e0 + e1 (norm sqrt 2); x has score 3; d chosen so <w, d> = rate.
        let dims = [2, 1, 1, 1];
        let w = Tensor4::new(dims, vec![1.0, 1.0]).unwrap();
        let x = Tensor4::new(dims, vec![1.5, 1.5]).unwrap();
        // d = a e0 + b e1 with a + b = rate and a^2 + b^2 = 1.
        let disc = (2.0 - rate * rate).sqrt();
        let a = (rate + disc) / 2.0;
        let b = (rate - disc) / 2.0;
        let d = Tensor4::new(dims, vec![a, b]).unwrap();
        (LinearThresholdModel::new(w, thresholds).unwrap(), x, d)
    }

    #[test]
    fn matches_closed_form() {
        let (mut m, x, d) = setup(-1.0, vec![0.0]);
        let cfg = AttackConfig::default();
        let g = g_eval(&mut m, &x, &d, Label(1), &cfg).unwrap();
        assert!((g.lambda - 3.0).abs() <= 3.0 * 3.0 * cfg.lambda_tol, "{}", g.lambda);
        assert!(g.lambda >= 3.0);
        assert_eq!(g.queries, m.query_count());
    }

    #[test]
    fn infeasible_direction_is_flagged() {
        let (mut m, x, d) = setup(1.0, vec![0.0]);
        match g_eval(&mut m, &x, &d, Label(1), &AttackConfig::default()) {
            Err(Error::DirectionInfeasible { queries, .. }) => {
                assert!(queries > 0);
                assert_eq!(queries, m.query_count());
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn query_count_within_bound() {
        let cfg = AttackConfig::default();
        for (rate, th) in [(-1.0, vec![0.0]), (1.0, vec![0.0, 5.0]), (-0.2, vec![0.0]), (-1.4, vec![2.999])] {
            let (mut m, x, d) = setup(rate, th);
            let search = LineSearch::for_input(&x, &cfg);
            let g = g_eval(&mut m, &x, &d, Label(1), &cfg).unwrap();
            // Coarse steps: probes before the bisection starts.
            let ratio = (g.lambda / search.start).log2().abs().ceil() as u64 + 1;
            let bound = ratio + (1.0 / cfg.lambda_tol).log2().ceil() as u64 + 1;
            assert!(g.queries <= bound, "rate {rate}: {} > {bound}", g.queries);
            assert!(g.queries <= search.worst_case_queries(search.start));
        }
    }

    #[test]
    fn rejects_non_unit_direction() {
        let (mut m, x, d) = setup(-1.0, vec![0.0]);
        assert!(g_eval(&mut m, &x, &d.scaled(2.0), Label(1), &AttackConfig::default()).is_err());
        assert_eq!(m.query_count(), 0);
    }

    #[test]
    fn distance_below_short_circuits() {
        let (mut m, x, d) = setup(-1.0, vec![0.0]);
        let search = LineSearch::for_input(&x, &AttackConfig::default());
        assert_eq!(search.distance_below(&mut m, &x, &d, Label(1), 2.0).unwrap(), Boundary::NotBelow);
        assert_eq!(m.query_count(), 1);
        match search.distance_below(&mut m, &x, &d, Label(1), 4.0).unwrap() {
            Boundary::Found(l) => assert!((3.0..3.0 * (1.0 + 1e-4) + 1e-12).contains(&l)),
            other => panic!("{other:?}"),
        }
    }
}
