//! Scalar abstraction for the pointwise algebra and calculus layers.

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalars the core algebra is generic over (f32 or f64).
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossless-enough conversion from an f64 literal.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
