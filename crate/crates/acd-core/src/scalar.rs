//! Floating-point scalar abstraction for the numeric kernels.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: f32 or f64.
///
/// All math kernels in this crate are generic over `Scalar` so the training
/// path can run in `f32` while gradient checks and oracles recompute the same
/// code in `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Convert an `f64` literal or intermediate to `T`.
#[inline]
pub fn real<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("finite f64 converts to scalar")
}
