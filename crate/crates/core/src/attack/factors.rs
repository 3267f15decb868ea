use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::tensor::{outer_product, Dims, Tensor4};

/// Euclidean norm of a vector.
pub fn norm2<S: Scalar>(v: &[S]) -> S {
    v.iter().map(|&a| a * a).sum::<S>().sqrt()
}

pub(crate) fn gaussian_vec<S: Scalar, R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<S> {
    (0..len).map(|_| S::of(rng.sample::<f64, _>(StandardNormal))).collect()
}

/// Gaussian vector rescaled to unit length.
pub(crate) fn unit_gaussian_vec<S: Scalar, R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<S> {
    loop {
        let v: Vec<S> = gaussian_vec(len, rng);
        let n = norm2(&v);
        if n > S::zero() {
            return v.into_iter().map(|a| a / n).collect();
        }
    }
}

/// One rank-one term: a factor vector per mode.
pub type Term<S> = [Vec<S>; 4];

/// The low-rank attack variable: `l` terms of four factor vectors whose outer
/// products sum to the perturbation direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorSet<S> {
    terms: Vec<Term<S>>,
}

impl<S: Scalar> FactorSet<S> {
    pub fn new(terms: Vec<Term<S>>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return invalid("a factor set needs at least one term");
        };
        let dims: Dims = std::array::from_fn(|j| first[j].len());
        for (i, term) in terms.iter().enumerate() {
            for j in 0..4 {
                if term[j].len() != dims[j] {
                    return invalid(format!(
                        "term {i} mode {} has length {}, expected {}",
                        j + 1,
                        term[j].len(),
                        dims[j]
                    ));
                }
                if term[j].iter().any(|v| !v.is_finite()) {
                    return invalid(format!("term {i} mode {} has non-finite entries", j + 1));
                }
                if !(norm2(&term[j]) > S::zero()) {
                    return invalid(format!("term {i} mode {} has zero norm", j + 1));
                }
            }
        }
        Ok(Self { terms })
    }

    pub fn rank_one(v1: Vec<S>, v2: Vec<S>, v3: Vec<S>, v4: Vec<S>) -> Result<Self> {
        Self::new(vec![[v1, v2, v3, v4]])
    }

    /// `rank` terms of i.i.d. standard normal entries.
    pub fn gaussian<R: Rng + ?Sized>(dims: Dims, rank: usize, rng: &mut R) -> Result<Self> {
        let terms = (0..rank).map(|_| std::array::from_fn(|j| gaussian_vec(dims[j], rng))).collect();
        Self::new(terms)
    }

    pub fn terms(&self) -> &[Term<S>] {
        &self.terms
    }

    /// Number of rank-one terms `l`.
    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    pub fn dims(&self) -> Dims {
        std::array::from_fn(|j| self.terms[0][j].len())
    }

    /// Number of free scalars, `l * (W + H + C + T)`.
    pub fn parameter_count(&self) -> usize {
        self.rank() * self.dims().iter().sum::<usize>()
    }

    /// Every factor rescaled to unit norm. The assembled direction is unchanged.
    pub fn normalized(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                std::array::from_fn(|j| {
                    let n = norm2(&t[j]);
                    t[j].iter().map(|&v| v / n).collect()
                })
            })
            .collect();
        Self { terms }
    }

    /// Copy with `delta` added to factor `mode` (1-based) of `term`.
    pub fn perturbed(&self, term: usize, mode: usize, delta: &[S], scale: S) -> Result<Self> {
        let mut terms = self.terms.clone();
        let f = &mut terms[term][mode - 1];
        for (a, &d) in f.iter_mut().zip(delta) {
            *a += scale * d;
        }
        Self::new(terms)
    }

    /// `self - alpha * grad`, or an error if a factor collapses to zero.
    pub fn descend(&self, grad: &[Term<S>], alpha: S) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .zip(grad)
            .map(|(t, g)| std::array::from_fn(|j| t[j].iter().zip(&g[j]).map(|(&a, &b)| a - alpha * b).collect()))
            .collect();
        Self::new(terms)
    }

    /// Raw sum of outer products `Σ θ⁽¹⁾∘θ⁽²⁾∘θ⁽³⁾∘θ⁽⁴⁾`, without normalization.
    pub fn outer_sum(&self) -> Result<Tensor4<S>> {
        let mut acc: Option<Tensor4<S>> = None;
        for t in &self.terms {
            let p = outer_product(&t[0], &t[1], &t[2], &t[3])?;
            acc = Some(match acc {
                None => p,
                Some(a) => &a + &p,
            });
        }
        Ok(acc.expect("at least one term"))
    }
}

/// Unit perturbation direction of a factor set and its scale.
///
/// For one term this is the outer product of the per-mode normalized factors
/// (unit norm by multiplicativity) with scale `∏ⱼ‖θ⁽ʲ⁾‖`. For several terms the
/// per-term normalized outer products are summed into `D`, and the result is
/// `D / ‖D‖_F` with scale `‖D‖_F`.
pub fn assemble_direction<S: Scalar>(theta: &FactorSet<S>) -> Result<(Tensor4<S>, S)> {
    let unit = theta.normalized();
    if theta.rank() == 1 {
        let t = &theta.terms[0];
        let scale = t.iter().fold(S::one(), |acc, f| acc * norm2(f));
        let u = &unit.terms[0];
        return Ok((outer_product(&u[0], &u[1], &u[2], &u[3])?, scale));
    }
    let d = unit.outer_sum()?;
    let n = d.frobenius_norm();
    if n == S::zero() {
        return invalid("rank-one terms cancel to a zero direction");
    }
    Ok((d.scaled(S::one() / n), n))
}

/// `(Σᵢ ∏ⱼ‖θᵢ⁽ʲ⁾‖², Σᵢ Σⱼ‖θᵢ⁽ʲ⁾‖²)`: the overall perturbation energy and the
/// per-mode energy sum.
pub fn loss_values<S: Scalar>(theta: &FactorSet<S>) -> (S, S) {
    let mut product_loss = S::zero();
    let mut sum_loss = S::zero();
    for t in &theta.terms {
        let sq: [S; 4] = std::array::from_fn(|j| t[j].iter().map(|&v| v * v).sum());
        product_loss += sq.iter().fold(S::one(), |a, &b| a * b);
        sum_loss += sq.iter().copied().sum::<S>();
    }
    (product_loss, sum_loss)
}
