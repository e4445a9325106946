//! Scalar abstraction for the numeric core.
//!
//! Geometry, battery math, and the solver are written against [`Real`] so
//! the same code instantiates at `f32` or `f64`. The crate root exports
//! `f64` aliases for the common case; `f32` is mainly useful for
//! memory-constrained embeddings and as a cross-check that no algorithm
//! silently depends on double precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar the numeric core can run on.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Lifts an `f64` constant into the scalar type.
#[inline]
pub fn real<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("f64 constant must be representable in the scalar type")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_round_trip_in_both_widths() {
        assert_eq!(real::<f64>(6_371_000.0), 6_371_000.0);
        assert_eq!(real::<f32>(2.5), 2.5f32);
        // f32 rounds but must not panic on representable magnitudes.
        let mu: f32 = real(3.98e14);
        assert!(mu.is_finite() && mu > 0.0);
    }
}
