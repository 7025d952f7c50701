//! Scalar abstraction for the geometry and coverage math.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the whole crate is generic over.
///
/// `f32` is enough for desk-scale pools; the crate-root aliases pick `f64`.
/// The bound set is what the algorithms actually use: `Float` for the
/// max-min arithmetic, the primitive conversions for counts and literals,
/// and `Send + Sync` so distance/graph construction can fan out.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

/// Converts an `f64` literal or count-derived value into `F`.
///
/// Panics on values outside `F`'s range; callers only pass small constants
/// and counts, which every `Real` of interest represents.
pub fn real<F: Real>(v: f64) -> F {
    F::from_f64(v).expect("value not representable in scalar type")
}

/// Converts a count into `F` (exact for counts below the mantissa limit).
pub fn real_usize<F: Real>(v: usize) -> F {
    F::from_usize(v).expect("count not representable in scalar type")
}
