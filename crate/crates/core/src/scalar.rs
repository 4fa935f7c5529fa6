//! Floating-point scalar abstraction shared by every numerical routine.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the library is generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal; infallible for the supported float types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_index(k: usize) -> Self {
        Self::from_usize(k).expect("index representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Absolute tolerance used when deciding whether `x / unit` is an integer
    /// or a time sits on a breakpoint.
    #[inline]
    fn snap_tolerance() -> Self {
        Self::lit(1e3) * Self::epsilon()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Returns `Some(n)` when `x / unit` is within tolerance of the integer `n >= 0`.
pub(crate) fn integer_ratio<S: Scalar>(x: S, unit: S) -> Option<usize> {
    let q = x / unit;
    let n = q.round();
    if n < S::zero() {
        return None;
    }
    let tol = S::lit(1e-6).max(S::lit(1e4) * S::epsilon()) * S::one().max(n.abs().sqrt());
    if (q - n).abs() <= tol {
        n.to_usize()
    } else {
        None
    }
}
