//! Floating point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    fn lit(v: f64) -> Self;

    /// Converts a count or index into the scalar type.
    fn from_count(n: usize) -> Self;

    /// Widens to `f64` for reporting and serialization.
    fn to_f64_lossy(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn lit(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn from_count(n: usize) -> Self {
        n as f32
    }
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn lit(v: f64) -> Self {
        v
    }
    #[inline]
    fn from_count(n: usize) -> Self {
        n as f64
    }
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

/// Maximum absolute entry, `0` for an empty slice. NaN entries propagate.
pub fn sup_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| {
        let a = x.abs();
        if a.is_nan() || acc.is_nan() {
            T::nan()
        } else {
            acc.max(a)
        }
    })
}

/// Maximum absolute difference between two equally long slices.
pub fn sup_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
        let d = (x - y).abs();
        if d.is_nan() || acc.is_nan() {
            T::nan()
        } else {
            acc.max(d)
        }
    })
}
