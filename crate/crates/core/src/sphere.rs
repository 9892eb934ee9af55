//! Geometry of the unit sphere `S^d` and the special numbers it is built on:
//! double factorials, Wallis-type integrals and sphere surface areas.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `n!! = n (n-2) (n-4) ...`, with `0!! = (-1)!! = 1`.
pub fn double_factorial(n: i64) -> Result<BigUint> {
    if n < -1 {
        return Err(Error::invalid(format!("double factorial of {n} is undefined")));
    }
    let mut acc = BigUint::one();
    let mut k = n;
    while k > 1 {
        acc *= k as u64;
        k -= 2;
    }
    Ok(acc)
}

/// `double_factorial` for arguments already known to be `>= -1`.
pub(crate) fn dfact(n: i64) -> BigUint {
    double_factorial(n).expect("argument >= -1")
}

pub(crate) fn dfact_ratio(num: &[i64], den: &[i64]) -> BigRational {
    let top: BigUint = num.iter().map(|&n| dfact(n)).product();
    let bottom: BigUint = den.iter().map(|&n| dfact(n)).product();
    BigRational::new(BigInt::from(top), BigInt::from(bottom))
}

pub(crate) fn ratio_to_real<T: Real>(r: &BigRational) -> T {
    T::of(r.to_f64().unwrap_or(f64::NAN))
}

/// `∫_0^π cos^a θ sin^b θ dθ` in closed form.
pub fn wallis_integral<T: Real>(a: u32, b: u32) -> T {
    if a % 2 == 1 {
        return T::zero();
    }
    let (a, b) = (a as i64, b as i64);
    let ratio: T = ratio_to_real(&dfact_ratio(&[a - 1, b - 1], &[a + b]));
    if b % 2 == 0 {
        T::PI() * ratio
    } else {
        T::two() * ratio
    }
}

/// Surface area `|S^d|` of the unit `d`-sphere.
///
/// `|S^{2p}| = 2 (2π)^p / (2p-1)!!` and `|S^{2p-1}| = (2π)^p / (2p-2)!!`. The
/// products are accumulated factor by factor so large `d` neither overflows
/// nor underflows.
pub fn sphere_surface<T: Real>(d: usize) -> T {
    let two_pi = T::TAU();
    if d % 2 == 0 {
        // 2 * prod_{i=1}^{p} 2π / (2i - 1)
        (1..=d / 2).fold(T::two(), |acc, i| acc * two_pi / T::of((2 * i - 1) as f64))
    } else {
        // prod_{i=1}^{p} 2π / (2i - 2)!! step, with (0)!! = 1
        let p = (d + 1) / 2;
        (1..=p).fold(T::one(), |acc, i| {
            let step = if i == 1 { T::one() } else { T::of((2 * i - 2) as f64) };
            acc * two_pi / step
        })
    }
}

/// A point of the unit sphere `S^d ⊂ R^{d+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint<T> {
    coords: Vec<T>,
}

fn unit_tolerance<T: Real>() -> T {
    T::of(1e-12).max(T::epsilon() * T::of(64.0))
}

impl<T: Real> SpherePoint<T> {
    /// Wraps Cartesian coordinates, checking `Σ x_i² = 1`.
    pub fn from_cartesian(coords: Vec<T>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::invalid("a point of S^d needs at least 2 coordinates"));
        }
        let norm_sq = coords.iter().fold(T::zero(), |acc, &x| acc + x * x);
        if (norm_sq - T::one()).abs() > unit_tolerance::<T>() {
            return Err(Error::invalid(format!("coordinates are not on the unit sphere (|x|^2 = {norm_sq:?})")));
        }
        Ok(SpherePoint { coords })
    }

    /// Projects a nonzero vector onto the sphere.
    pub fn normalize(mut coords: Vec<T>) -> Result<Self> {
        let norm = coords.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
        if coords.len() < 2 || !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::invalid("cannot normalize a zero or non-finite vector"));
        }
        coords.iter_mut().for_each(|x| *x = *x / norm);
        Ok(SpherePoint { coords })
    }

    /// The error-free state `P = (1, 0, ..., 0)`.
    pub fn pole(d: usize) -> Self {
        let mut coords = vec![T::zero(); d + 1];
        coords[0] = T::one();
        SpherePoint { coords }
    }

    pub fn antipode(d: usize) -> Self {
        let mut coords = vec![T::zero(); d + 1];
        coords[0] = -T::one();
        SpherePoint { coords }
    }

    /// Builds a point from its `d` polar angles.
    ///
    /// `θ_0..θ_{d-2} ∈ [0, π]`, `θ_{d-1} ∈ [-π, π]` and
    /// `x_j = sin θ_0 ⋯ sin θ_{j-1} cos θ_j`, `x_d = sin θ_0 ⋯ sin θ_{d-1}`.
    pub fn from_polar(angles: &[T]) -> Result<Self> {
        let d = angles.len();
        if d == 0 {
            return Err(Error::invalid("S^d needs d >= 1 polar angles"));
        }
        let slack = T::of(1e-12);
        for (j, &a) in angles.iter().enumerate() {
            let ok = if j + 1 < d {
                a >= -slack && a <= T::PI() + slack
            } else {
                a >= -T::PI() - slack && a <= T::PI() + slack
            };
            if !ok {
                return Err(Error::invalid(format!("polar angle theta_{j} = {a:?} out of range")));
            }
        }
        Ok(SpherePoint { coords: polar_coords(angles) })
    }

    /// Recovers the polar angles. Where some `sin θ_j = 0` the trailing angles
    /// are not determined and are returned as zero.
    pub fn to_polar(&self) -> Vec<T> {
        let x = &self.coords;
        let d = x.len() - 1;
        // tail[j] = sqrt(x_{j}^2 + ... + x_d^2)
        let mut tail = vec![T::zero(); d + 2];
        for j in (0..=d).rev() {
            tail[j] = (tail[j + 1] * tail[j + 1] + x[j] * x[j]).sqrt();
        }
        let mut angles = vec![T::zero(); d];
        for j in 0..d {
            let rest = tail[j + 1];
            if rest == T::zero() {
                angles[j] = if x[j] < T::zero() { T::PI() } else { T::zero() };
                if j + 1 == d && angles[j] == T::PI() {
                    angles[j] = -T::PI();
                }
                break;
            }
            if j + 1 < d {
                angles[j] = rest.atan2(x[j]);
            } else {
                let mut last = x[d].atan2(x[d - 1]);
                if last >= T::PI() {
                    last = -T::PI();
                }
                angles[j] = last;
            }
        }
        angles
    }

    /// Dimension `d` of the sphere this point lives on.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<T> {
        self.coords
    }

    /// First coordinate, the cosine of the angle to the pole.
    pub fn x0(&self) -> T {
        self.coords[0]
    }

    pub fn inner_product(&self, other: &Self) -> Result<T> {
        inner_product(self, other)
    }

    /// `‖x - y‖² = 2 - 2⟨x, y⟩`.
    pub fn chordal_distance_sq(&self, other: &Self) -> Result<T> {
        Ok(T::two() - T::two() * inner_product(self, other)?)
    }
}

pub(crate) fn polar_coords<T: Real>(angles: &[T]) -> Vec<T> {
    let d = angles.len();
    let mut coords = Vec::with_capacity(d + 1);
    let mut sin_prod = T::one();
    for &a in angles {
        coords.push(sin_prod * a.cos());
        sin_prod = sin_prod * a.sin();
    }
    coords.push(sin_prod);
    coords
}

/// `⟨x, y⟩`, clamped to `[-1, 1]`.
pub fn inner_product<T: Real>(x: &SpherePoint<T>, y: &SpherePoint<T>) -> Result<T> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: y.dim() });
    }
    let dot = x.coords.iter().zip(&y.coords).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
    Ok(dot.max(-T::one()).min(T::one()))
}

/// `n!` for the double-factorial cross-check.
pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}
