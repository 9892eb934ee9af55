//! Variance calculus for random errors on the unit sphere `S^d`.
//!
//! An `n`-qubit state is a point of `S^d` with `d = 2^{n+1} - 1`, and an error
//! is a random variable on that sphere centered on the pole `P = (1, 0, ..., 0)`.
//! Its variance `V = E[2 - 2 x_0]` composes under independent sums as
//! `V12 = V1 + V2 - V1·V2/2`. This crate provides:
//!
//! * [`sphere`]: coordinates, double factorials, Wallis integrals, surface areas;
//! * [`densities`]: isotropic and general error densities with their variances;
//! * [`convolve`]: densities and variances of sums by spherical convolution;
//! * [`calculus`]: the composition law, accumulation over many steps, thresholds;
//! * [`sampler`]: Monte Carlo realizations and evidence for non-isotropic sums;
//! * [`identities`]: exact checks of the double-factorial summation identity;
//! * [`quantum`]: state vectors, density matrices, quantum variance and fidelity.
//!
//! Geometry, quadrature and the variance algebra are generic over the scalar
//! type; the aliases below fix the common choices.

pub mod calculus;
pub mod convolve;
pub mod densities;
pub mod error;
pub mod identities;
pub mod quadrature;
pub mod quantum;
pub mod sampler;
pub mod scalar;
pub mod sphere;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type ExactRational = num_rational::BigRational;

pub type SpherePointF64 = sphere::SpherePoint<f64>;
pub type SpherePointF32 = sphere::SpherePoint<f32>;
pub type GaussLegendreF64 = quadrature::GaussLegendre<f64>;
pub type ThresholdReportF64 = calculus::ThresholdReport<f64>;
