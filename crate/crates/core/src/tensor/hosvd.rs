use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

use super::{jacobi_svd, mode_n_product, unfold, Matrix, Tensor4};

/// Relative singular-value threshold used when none is given.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Per-mode ranks `(r1, r2, r3, r4)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RankTuple(pub [usize; 4]);

impl fmt::Display for RankTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "({a},{b},{c},{d})")
    }
}

impl std::str::FromStr for RankTuple {
    type Err = crate::Error;

    /// Accepts `1,2,3,4` with optional surrounding parentheses.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<usize> = inner
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| crate::Error::InvalidArgument(format!("bad rank tuple {s:?}: {e}")))?;
        match parts.as_slice() {
            &[a, b, c, d] => Ok(RankTuple([a, b, c, d])),
            _ => invalid(format!("rank tuple needs 4 entries, got {s:?}")),
        }
    }
}

/// Tucker factors plus core: `t ≈ S ×1 U1 ×2 U2 ×3 U3 ×4 U4`.
#[derive(Clone, Debug)]
pub struct FactorMatrixSet<S> {
    /// `U⁽ʲ⁾`, `I_j x r_j`, columns ordered by descending singular value.
    pub factors: [Matrix<S>; 4],
    pub core: Tensor4<S>,
    /// Full singular spectrum of each mode-j unfolding (before truncation).
    pub singular_values: [Vec<S>; 4],
}

impl<S: Scalar> FactorMatrixSet<S> {
    pub fn ranks(&self) -> RankTuple {
        RankTuple(std::array::from_fn(|j| self.factors[j].cols()))
    }

    pub fn reconstruct(&self) -> Result<Tensor4<S>> {
        let mut t = self.core.clone();
        for (j, u) in self.factors.iter().enumerate() {
            t = mode_n_product(&t, u, j + 1)?;
        }
        Ok(t)
    }

    /// Column `q` (zero-based) of the mode-`mode` factor.
    pub fn column(&self, mode: usize, q: usize) -> Result<Vec<S>> {
        let axis = super::check_mode(mode)?;
        let u = &self.factors[axis];
        if q >= u.cols() {
            return invalid(format!("column {q} out of range for mode {mode} with rank {}", u.cols()));
        }
        Ok(u.column(q))
    }
}

/// Higher-order SVD. `truncation` keeps the leading `r_j` left singular
/// vectors of each unfolding; `None` keeps all `I_j`.
pub fn hosvd<S: Scalar>(t: &Tensor4<S>, truncation: Option<RankTuple>) -> Result<FactorMatrixSet<S>> {
    let dims = t.dims();
    if let Some(RankTuple(r)) = truncation {
        for j in 0..4 {
            if r[j] == 0 || r[j] > dims[j] {
                return invalid(format!("truncation rank {} for mode {} must lie in 1..={}", r[j], j + 1, dims[j]));
            }
        }
    }
    let mut factors = Vec::with_capacity(4);
    let mut spectra = Vec::with_capacity(4);
    for j in 0..4 {
        let svd = jacobi_svd(&unfold(t, j + 1)?);
        let keep = truncation.map_or(dims[j], |RankTuple(r)| r[j]);
        factors.push(svd.u.leading_columns(keep));
        spectra.push(svd.singular_values);
    }
    let mut core = t.clone();
    for (j, u) in factors.iter().enumerate() {
        core = mode_n_product(&core, &u.transpose(), j + 1)?;
    }
    let factors: [Matrix<S>; 4] = factors.try_into().expect("four modes");
    let singular_values: [Vec<S>; 4] = spectra.try_into().expect("four modes");
    Ok(FactorMatrixSet { factors, core, singular_values })
}

/// Per-mode count of singular values above `tol * sigma_max` of that
/// unfolding. The zero tensor has rank `(0,0,0,0)`.
pub fn multilinear_rank<S: Scalar>(t: &Tensor4<S>, tol: f64) -> Result<RankTuple> {
    if !(tol > 0.0 && tol < 1.0) {
        return invalid(format!("rank tolerance {tol} must lie in (0, 1)"));
    }
    let mut ranks = [0usize; 4];
    for (j, r) in ranks.iter_mut().enumerate() {
        let sv = jacobi_svd(&unfold(t, j + 1)?).singular_values;
        let top = sv.first().copied().unwrap_or_else(S::zero);
        if top == S::zero() {
            continue;
        }
        let cut = top * S::of(tol);
        *r = sv.iter().filter(|&&s| s > cut).count();
    }
    Ok(RankTuple(ranks))
}
