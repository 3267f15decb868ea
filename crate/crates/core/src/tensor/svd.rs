use crate::scalar::Scalar;

use super::Matrix;

const MAX_SWEEPS: usize = 100;

/// Left singular system of an `m x p` matrix.
#[derive(Clone, Debug)]
pub struct Svd<S> {
    /// `m x m`, orthonormal; column `k` pairs with `singular_values[k]`.
    pub u: Matrix<S>,
    /// Non-increasing, length `m` (trailing entries are zero when `p < m`).
    pub singular_values: Vec<S>,
}

/// One-sided (Hestenes) Jacobi SVD applied to the rows of `a`.
///
/// Rows are rotated pairwise until mutually orthogonal; the accumulated
/// rotations form `U` and the final row norms are the singular values. Works
/// directly on the wide unfolding, so small singular values keep absolute
/// accuracy near `eps * sigma_max` instead of the `sqrt(eps)` floor a Gram
/// eigen-decomposition would impose.
///
/// Each singular vector is sign-normalized so that its first entry of largest
/// magnitude is nonnegative.
pub fn jacobi_svd<S: Scalar>(a: &Matrix<S>) -> Svd<S> {
    let m = a.rows();
    let p = a.cols();
    let mut b: Vec<S> = a.data().to_vec();
    let mut w = Matrix::<S>::identity(m);

    let eps = S::epsilon();
    let total: S = b.iter().map(|&v| v * v).sum();
    let floor = eps * eps * total;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..m {
            for j in i + 1..m {
                let (mut alpha, mut beta, mut gamma) = (S::zero(), S::zero(), S::zero());
                {
                    let ri = &b[i * p..(i + 1) * p];
                    let rj = &b[j * p..(j + 1) * p];
                    for (&x, &y) in ri.iter().zip(rj) {
                        alpha += x * x;
                        beta += y * y;
                        gamma += x * y;
                    }
                }
                if gamma.abs() <= floor || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let two = S::one() + S::one();
                let zeta = (beta - alpha) / (two * gamma);
                let t = zeta.signum() / (zeta.abs() + (S::one() + zeta * zeta).sqrt());
                let c = S::one() / (S::one() + t * t).sqrt();
                let s = c * t;
                for k in 0..p {
                    let x = b[i * p + k];
                    let y = b[j * p + k];
                    b[i * p + k] = c * x - s * y;
                    b[j * p + k] = s * x + c * y;
                }
                for r in 0..m {
                    let x = w.get(r, i);
                    let y = w.get(r, j);
                    w.set(r, i, c * x - s * y);
                    w.set(r, j, s * x + c * y);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<S> = (0..m).map(|i| b[i * p..(i + 1) * p].iter().map(|&v| v * v).sum::<S>().sqrt()).collect();
    let mut order: Vec<usize> = (0..m).collect();
    // Stable sort keeps ties in their original order.
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap_or(std::cmp::Ordering::Equal));

    let mut u = Matrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        let col = w.column(src);
        let lead = col
            .iter()
            .enumerate()
            .fold((0, S::zero()), |(bi, bv), (k, &v)| if v.abs() > bv { (k, v.abs()) } else { (bi, bv) })
            .0;
        let sign = if col[lead] < S::zero() { -S::one() } else { S::one() };
        for (r, &v) in col.iter().enumerate() {
            u.set(r, dst, sign * v);
        }
    }
    let singular_values = order.iter().map(|&k| norms[k]).collect();
    Svd { u, singular_values }
}
