//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point scalar the geometry, counting and Fourier code is written against.
///
/// Implemented for `f32` and `f64`. Tolerances quoted throughout the crate assume `f64`;
/// `f32` instantiations are supported but only meaningful at single-precision accuracy.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Default + Send + Sync + Debug + Display + 'static
{
    /// Converts an `f64` literal.
    #[inline(always)]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline(always)]
    fn from_int(x: i64) -> Self {
        Self::from_i64(x).expect("integer representable")
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Two times pi.
    #[inline(always)]
    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    fn half<F: Real>() -> F {
        F::lit(0.5)
    }

    #[test]
    fn literals_round_trip() {
        assert_eq!(half::<f64>(), 0.5);
        assert_eq!(half::<f32>(), 0.5f32);
        assert_eq!(f64::from_int(-7), -7.0);
        assert!((f32::two_pi().as_f64() - std::f64::consts::TAU).abs() < 1e-6);
    }
}
