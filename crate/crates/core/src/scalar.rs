use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, NumCast};

/// Real floating-point scalar the tensor algebra and attacks are written against.
///
/// Implemented for `f32` and `f64`. Randomness, metrics and file I/O go through
/// `f64` and are cast in and out with [`Scalar::of`] / [`Scalar::as_f64`].
pub trait Scalar:
    Float + FromPrimitive + NumCast + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Machine epsilon as `f64`, used to scale numerical tolerances.
    const EPS: f64;

    /// Lossy cast from `f64`.
    fn of(v: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Scalar for f64 {
    const EPS: f64 = f64::EPSILON;

    #[inline]
    fn of(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    const EPS: f64 = f32::EPSILON as f64;

    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}
