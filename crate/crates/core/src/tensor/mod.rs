//! Dense order-4 tensors and the multilinear algebra the attacks are built on.
//!
//! Storage is column-major over modes: element `(i1, i2, i3, i4)` lives at
//! offset `i1 + W * (i2 + H * (i3 + C * i4))`. Unfoldings place the
//! remaining modes along columns in ascending mode order, earlier mode fastest.
//! Modes are numbered `1..=4` in every public signature.

mod hosvd;
mod io;
mod matrix;
mod svd;

pub use hosvd::{hosvd, multilinear_rank, FactorMatrixSet, RankTuple, DEFAULT_RANK_TOL};
pub use io::{load_ten4, read_ten4, save_ten4, write_ten4, TEN4_MAGIC};
pub use matrix::Matrix;
pub use svd::{jacobi_svd, Svd};

use std::ops::{Add, Sub};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Extents `(W, H, C, T)`.
pub type Dims = [usize; 4];

pub(crate) fn check_mode(mode: usize) -> Result<usize> {
    if (1..=4).contains(&mode) {
        Ok(mode - 1)
    } else {
        invalid(format!("mode {mode} outside 1..=4"))
    }
}

/// Product of extents before and after `axis` (0-based).
#[inline]
fn split_strides(dims: &Dims, axis: usize) -> (usize, usize) {
    let left = dims[..axis].iter().product();
    let right = dims[axis + 1..].iter().product();
    (left, right)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4<S> {
    dims: Dims,
    data: Vec<S>,
}

impl<S: Scalar> Tensor4<S> {
    /// Builds a tensor from canonical-layout data, validating shape and finiteness.
    pub fn new(dims: Dims, data: Vec<S>) -> Result<Self> {
        check_dims(&dims)?;
        let len: usize = dims.iter().product();
        if data.len() != len {
            return invalid(format!("data length {} does not match dims {:?} (expected {len})", data.len(), dims));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite value at offset {pos}"));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Dims) -> Result<Self> {
        Self::filled(dims, S::zero())
    }

    pub fn ones(dims: Dims) -> Result<Self> {
        Self::filled(dims, S::one())
    }

    pub fn filled(dims: Dims, value: S) -> Result<Self> {
        check_dims(&dims)?;
        if !value.is_finite() {
            return invalid("fill value must be finite");
        }
        Ok(Self { dims, data: vec![value; dims.iter().product()] })
    }

    /// Builds a tensor by evaluating `f` at every multi-index (zero-based).
    pub fn from_fn(dims: Dims, mut f: impl FnMut([usize; 4]) -> S) -> Result<Self> {
        check_dims(&dims)?;
        let mut data = Vec::with_capacity(dims.iter().product());
        for i4 in 0..dims[3] {
            for i3 in 0..dims[2] {
                for i2 in 0..dims[1] {
                    for i1 in 0..dims[0] {
                        data.push(f([i1, i2, i3, i4]));
                    }
                }
            }
        }
        Self::new(dims, data)
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn offset(&self, idx: [usize; 4]) -> usize {
        let [w, h, c, _] = self.dims;
        idx[0] + w * (idx[1] + h * (idx[2] + c * idx[3]))
    }

    #[inline]
    pub fn get(&self, idx: [usize; 4]) -> S {
        self.data[self.offset(idx)]
    }

    /// Square root of the sum of squared entries.
    pub fn frobenius_norm(&self) -> S {
        // Scaled accumulation keeps tiny and huge tensors from under/overflowing.
        let scale = self.max_abs();
        if scale == S::zero() {
            return S::zero();
        }
        let sum: S = self.data.iter().map(|&v| (v / scale) * (v / scale)).sum();
        scale * sum.sqrt()
    }

    /// Entrywise absolute sum.
    pub fn l1_norm(&self) -> S {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |m, v| m.max(v.abs()))
    }

    /// Entrywise inner product `<self, other>`.
    pub fn inner(&self, other: &Self) -> Result<S> {
        self.check_same_dims(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).sum())
    }

    pub fn scaled(&self, factor: S) -> Self {
        self.map(|v| v * factor)
    }

    /// `self + lambda * direction`.
    pub fn add_scaled(&self, lambda: S, direction: &Self) -> Result<Self> {
        self.check_same_dims(direction)?;
        let data = self.data.iter().zip(&direction.data).map(|(&a, &d)| a + lambda * d).collect();
        Ok(Self { dims: self.dims, data })
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self { dims: self.dims, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Returns `self / ||self||_F`, or `None` for the zero tensor.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.frobenius_norm();
        (n > S::zero()).then(|| self.scaled(S::one() / n))
    }

    /// Frame `t` (zero-based) as a `W x H x C` slice in canonical layout.
    pub fn frame(&self, t: usize) -> &[S] {
        let frame_len = self.dims[0] * self.dims[1] * self.dims[2];
        &self.data[t * frame_len..(t + 1) * frame_len]
    }

    pub fn cast<T: Scalar>(&self) -> Tensor4<T> {
        Tensor4 { dims: self.dims, data: self.data.iter().map(|v| T::of(v.as_f64())).collect() }
    }

    pub(crate) fn from_parts_unchecked(dims: Dims, data: Vec<S>) -> Self {
        debug_assert_eq!(data.len(), dims.iter().product::<usize>());
        Self { dims, data }
    }

    pub(crate) fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return invalid(format!("dimension mismatch: {:?} vs {:?}", self.dims, other.dims));
        }
        Ok(())
    }
}

fn check_dims(dims: &Dims) -> Result<()> {
    if dims.contains(&0) {
        return invalid(format!("all extents must be >= 1, got {dims:?}"));
    }
    Ok(())
}

impl<S: Scalar> Add for &Tensor4<S> {
    type Output = Tensor4<S>;

    /// Panics on mismatched dims.
    fn add(self, rhs: Self) -> Tensor4<S> {
        self.add_scaled(S::one(), rhs).expect("tensor dims must match")
    }
}

impl<S: Scalar> Sub for &Tensor4<S> {
    type Output = Tensor4<S>;

    /// Panics on mismatched dims.
    fn sub(self, rhs: Self) -> Tensor4<S> {
        self.add_scaled(-S::one(), rhs).expect("tensor dims must match")
    }
}

/// `v1 ∘ v2 ∘ v3 ∘ v4`.
pub fn outer_product<S: Scalar>(v1: &[S], v2: &[S], v3: &[S], v4: &[S]) -> Result<Tensor4<S>> {
    let vs = [v1, v2, v3, v4];
    if let Some(j) = vs.iter().position(|v| v.is_empty()) {
        return invalid(format!("factor vector for mode {} is empty", j + 1));
    }
    let dims = [v1.len(), v2.len(), v3.len(), v4.len()];
    let mut data = Vec::with_capacity(dims.iter().product());
    for &d in v4 {
        for &c in v3 {
            let cd = c * d;
            for &b in v2 {
                let bcd = b * cd;
                data.extend(v1.iter().map(|&a| a * bcd));
            }
        }
    }
    Tensor4::new(dims, data)
}

/// n-mode product `t ×_n m`, with `m` of shape `K x I_n`. The result has extent
/// `K` along `mode`.
pub fn mode_n_product<S: Scalar>(t: &Tensor4<S>, m: &Matrix<S>, mode: usize) -> Result<Tensor4<S>> {
    let axis = check_mode(mode)?;
    let dims = t.dims();
    let extent = dims[axis];
    if m.cols() != extent {
        return invalid(format!("matrix has {} columns but mode-{mode} extent is {extent}", m.cols()));
    }
    let k_out = m.rows();
    if k_out == 0 {
        return invalid("matrix must have at least one row");
    }
    let (left, right) = split_strides(&dims, axis);
    let mut out_dims = dims;
    out_dims[axis] = k_out;
    let mut out = vec![S::zero(); left * k_out * right];
    let src = t.data();
    for b in 0..right {
        for k in 0..k_out {
            let row = m.row(k);
            let dst = &mut out[left * (k + k_out * b)..left * (k + k_out * b + 1)];
            for (j, &mkj) in row.iter().enumerate() {
                if mkj == S::zero() {
                    continue;
                }
                let fiber = &src[left * (j + extent * b)..left * (j + extent * b + 1)];
                for (o, &s) in dst.iter_mut().zip(fiber) {
                    *o += mkj * s;
                }
            }
        }
    }
    Ok(Tensor4::from_parts_unchecked(out_dims, out))
}

/// Mode-n matricization: an `I_n x prod_{k != n} I_k` matrix.
pub fn unfold<S: Scalar>(t: &Tensor4<S>, mode: usize) -> Result<Matrix<S>> {
    let axis = check_mode(mode)?;
    let dims = t.dims();
    let extent = dims[axis];
    let (left, right) = split_strides(&dims, axis);
    let cols = left * right;
    let mut out = vec![S::zero(); extent * cols];
    let src = t.data();
    for b in 0..right {
        for i in 0..extent {
            let fiber = &src[left * (i + extent * b)..left * (i + extent * b + 1)];
            out[i * cols + left * b..i * cols + left * (b + 1)].copy_from_slice(fiber);
        }
    }
    Matrix::new(extent, cols, out)
}

/// Inverse of [`unfold`].
pub fn refold<S: Scalar>(m: &Matrix<S>, mode: usize, dims: Dims) -> Result<Tensor4<S>> {
    let axis = check_mode(mode)?;
    check_dims(&dims)?;
    let extent = dims[axis];
    let (left, right) = split_strides(&dims, axis);
    if m.rows() != extent || m.cols() != left * right {
        return invalid(format!("matrix {}x{} cannot be refolded along mode {mode} into {dims:?}", m.rows(), m.cols()));
    }
    let cols = left * right;
    let mut data = vec![S::zero(); extent * cols];
    let src = m.data();
    for b in 0..right {
        for i in 0..extent {
            data[left * (i + extent * b)..left * (i + extent * b + 1)]
                .copy_from_slice(&src[i * cols + left * b..i * cols + left * (b + 1)]);
        }
    }
    Tensor4::new(dims, data)
}

/// Contracts `t` with one vector on every mode except `keep`, returning the
/// surviving mode-`keep` fiber. `vectors[j]` is used on mode `j + 1`; the entry
/// at `keep - 1` is ignored.
pub fn contract_except<S: Scalar>(t: &Tensor4<S>, vectors: [&[S]; 4], keep: usize) -> Result<Vec<S>> {
    let keep_axis = check_mode(keep)?;
    let mut cur = t.clone();
    for axis in 0..4 {
        if axis == keep_axis {
            continue;
        }
        let row = Matrix::row_vector(vectors[axis].to_vec())?;
        cur = mode_n_product(&cur, &row, axis + 1)?;
    }
    Ok(cur.into_data())
}
