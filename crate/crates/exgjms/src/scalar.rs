//! Scalar abstraction: the whole stack is generic over the floating type.

use num_traits::float::{Float, FloatConst};
use num_traits::FromPrimitive;

/// Scalar type for jets, tensors and operators.
///
/// `f64` is the production type (all stated tolerances assume it); `f32` is
/// available for quick low-precision runs. Every constant the library needs
/// is either dyadic (exact in both) or built from small integer ratios.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Conversion from `f64`, used for literals and configuration values.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }

    /// Exact small rational `num / den`.
    fn ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num).expect("i64 conversion") / Self::from_i64(den).expect("i64 conversion")
    }

    fn usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize conversion")
    }
}

impl<S> Real for S where
    S: Float
        + FloatConst
        + FromPrimitive
        + std::ops::AddAssign
        + std::ops::SubAssign
        + std::ops::MulAssign
        + std::fmt::Debug
        + std::fmt::Display
        + Send
        + Sync
        + 'static
{
}
