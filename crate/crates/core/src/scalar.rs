//! Scalar abstraction for the simulator core.
//!
//! Everything numerical in [`crate::statevector`] and [`crate::qotp`] is
//! written against this trait so the same code runs over `f32` and `f64`.
//! The pipeline layers (protocol, swaptest, groveropt, kmeans) stick to the
//! `f64` instantiation.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display};

pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
    /// Tolerance for internal sanity checks on state norms.
    fn norm_tolerance() -> Self;

    /// Lossless-enough embedding of an `f64` constant.
    fn from_f64_const(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant")
    }
}

impl Scalar for f32 {
    fn norm_tolerance() -> f32 {
        1e-4
    }
}

impl Scalar for f64 {
    fn norm_tolerance() -> f64 {
        1e-10
    }
}
