//! Scalar abstractions shared by the generic parts of the crate.
//!
//! [`Scalar`] is the minimal field-like bound used by the variance algebra, so
//! the same code runs on `f32`, `f64` and exact rationals. [`Real`] adds the
//! transcendental functions needed by geometry and quadrature.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// A number supporting `+ - * /` and ordering: floats and `BigRational` alike.
pub trait Scalar: Num + Clone + PartialOrd + Debug {
    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn four() -> Self {
        Self::two() + Self::two()
    }
}

impl<T: Num + Clone + PartialOrd + Debug> Scalar for T {}

/// Floating point: `f32` or `f64`.
pub trait Real: Scalar + Float + FloatConst + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Lossy conversion from `f64`, used for constants.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("real converts to f64")
    }
}

impl<T> Real for T where T: Scalar + Float + FloatConst + FromPrimitive + ToPrimitive + Send + Sync + 'static {}
