//! Closed-form variance algebra for sums of independent errors on `S^d`.
//!
//! The composition law `V12 = V1 + V2 - V1·V2/2` is generic over [`Scalar`],
//! so it evaluates exactly on `BigRational` as well as on floats.

use num_traits::pow;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

fn check_variance<T: Scalar>(v: &T, name: &str) -> Result<()> {
    if *v < T::zero() || *v > T::four() {
        return Err(Error::invalid(format!("{name} = {v:?} is outside [0, 4]")));
    }
    Ok(())
}

fn check_step<T: Scalar>(sigma: &T) -> Result<()> {
    if !(*sigma > T::zero() && *sigma < T::two()) {
        return Err(Error::invalid(format!("per-step variance {sigma:?} is outside (0, 2)")));
    }
    Ok(())
}

/// Variance of the sum of two independent errors: `v1 + v2 - v1·v2/2`.
pub fn variance_sum<T: Scalar>(v1: T, v2: T) -> Result<T> {
    check_variance(&v1, "v1")?;
    check_variance(&v2, "v2")?;
    let prod = v1.clone() * v2.clone() / T::two();
    Ok(v1 + v2 - prod)
}

/// Linear variance `-ln(1 - v/2)`, which turns [`variance_sum`] into addition.
pub fn linear_variance<T: Real>(v: T) -> Result<T> {
    if !(v >= T::zero() && v < T::two()) {
        return Err(Error::invalid(format!("linear variance needs v in [0, 2), got {v:?}")));
    }
    Ok(-(-v / T::two()).ln_1p())
}

/// Inverse of [`linear_variance`]: `2 (1 - e^{-x})`.
pub fn inverse_linear_variance<T: Real>(x: T) -> Result<T> {
    if !(x >= T::zero()) {
        return Err(Error::invalid(format!("inverse linear variance needs x >= 0, got {x:?}")));
    }
    Ok(-T::two() * (-x).exp_m1())
}

/// Variance after `k` independent errors of variance `sigma`: `2 - 2 (1 - σ/2)^k`.
pub fn accumulate_equal<T: Scalar>(sigma: T, k: usize) -> Result<T> {
    check_step(&sigma)?;
    if k == 0 {
        return Err(Error::invalid("accumulation needs k >= 1"));
    }
    let keep = T::one() - sigma / T::two();
    Ok(T::two() - T::two() * pow(keep, k))
}

/// Left fold of [`variance_sum`] over the list.
pub fn accumulate_iterated<T: Scalar>(sigmas: &[T]) -> Result<T> {
    let (first, rest) = sigmas.split_first().ok_or_else(|| Error::invalid("empty variance list"))?;
    check_variance(first, "sigma")?;
    rest.iter().try_fold(first.clone(), |acc, s| variance_sum(acc, s.clone()))
}

/// Elementary symmetric polynomials `[s_0 = 1, s_1, ..., s_k]`, built by the
/// product recurrence `s_j ← s_j + x·s_{j-1}` one variable at a time.
pub fn elementary_symmetric<T: Scalar>(xs: &[T]) -> Vec<T> {
    let mut s = vec![T::zero(); xs.len() + 1];
    s[0] = T::one();
    for (i, x) in xs.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            let prev = s[j - 1].clone();
            s[j] = s[j].clone() + x.clone() * prev;
        }
    }
    s
}

/// `Σ_j (-1)^{j+1} s_j / 2^{j-1}` over the elementary symmetric polynomials
/// of the per-step variances.
///
/// In floating point the alternating sum cancels badly once `k·σ` is large;
/// use `BigRational` inputs for exact values in that regime.
pub fn accumulate_general<T: Scalar>(sigmas: &[T]) -> Result<T> {
    if sigmas.is_empty() {
        return Err(Error::invalid("empty variance list"));
    }
    for s in sigmas {
        check_step(s)?;
    }
    let s = elementary_symmetric(sigmas);
    let mut total = T::zero();
    let mut scale = T::one();
    for (j, sj) in s.iter().enumerate().skip(1) {
        let term = sj.clone() / scale.clone();
        total = if j % 2 == 1 { total + term } else { total - term };
        scale = scale * T::two();
    }
    Ok(total)
}

/// Per-step variance sequence and its running composition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccumulationTrajectory<T> {
    pub steps: Vec<T>,
    pub cumulative: Vec<T>,
    /// Running sum of the linearized steps.
    pub linearized: Vec<T>,
}

pub fn trajectory<T: Real>(sigmas: &[T]) -> Result<AccumulationTrajectory<T>> {
    let mut cumulative = Vec::with_capacity(sigmas.len());
    let mut linearized = Vec::with_capacity(sigmas.len());
    let mut v = T::zero();
    let mut lin = T::zero();
    for &s in sigmas {
        check_step(&s)?;
        v = variance_sum(v, s)?;
        lin = lin + linear_variance(s)?;
        cumulative.push(v);
        linearized.push(lin);
    }
    Ok(AccumulationTrajectory { steps: sigmas.to_vec(), cumulative, linearized })
}

/// Per-step variance bound keeping `k` accumulated errors at `sigma_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdReport<T> {
    pub sigma_max: T,
    pub k: usize,
    /// Exact `σ*` with `accumulate_equal(σ*, k) = sigma_max`.
    pub per_step: T,
    /// `k·σ*`, the finite-`k` value of the threshold constant.
    pub scaled: T,
    /// `lim k·σ* = -2 ln(1 - sigma_max/2)`.
    pub asymptotic: T,
}

pub fn threshold_sigma<T: Real>(sigma_max: T, k: usize) -> Result<ThresholdReport<T>> {
    check_step(&sigma_max)?;
    if k == 0 {
        return Err(Error::invalid("threshold needs k >= 1"));
    }
    let kf = T::of(k as f64);
    // 2 (1 - (1 - m/2)^{1/k}) = -2 expm1(ln(1 - m/2) / k)
    let log_keep = (-sigma_max / T::two()).ln_1p();
    let per_step = -T::two() * (log_keep / kf).exp_m1();
    Ok(ThresholdReport { sigma_max, k, per_step, scaled: per_step * kf, asymptotic: -T::two() * log_keep })
}

/// One cell of the variance-behavior table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeCell<T> {
    pub label: &'static str,
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> RangeCell<T> {
    pub fn contains(&self, v: &T) -> bool {
        *v > self.lower && *v < self.upper
    }
}

fn min<T: Scalar>(a: T, b: T) -> T {
    if a < b {
        a
    } else {
        b
    }
}

fn max<T: Scalar>(a: T, b: T) -> T {
    if a > b {
        a
    } else {
        b
    }
}

/// Predicted open interval for `variance_sum(v1, v2)`, by which halves of
/// `(0, 2) ∪ (2, 4)` the inputs fall in. Boundary values are rejected.
pub fn classify_range<T: Scalar>(v1: T, v2: T) -> Result<RangeCell<T>> {
    let low = |v: &T| *v > T::zero() && *v < T::two();
    let high = |v: &T| *v > T::two() && *v < T::four();
    for v in [&v1, &v2] {
        if !(low(v) || high(v)) {
            return Err(Error::invalid(format!("variance {v:?} is not in the open cells (0, 2) or (2, 4)")));
        }
    }
    let four = T::four();
    let cell = match (low(&v1), low(&v2)) {
        (true, true) => RangeCell { label: "max{V1,V2}<V12<2", lower: max(v1, v2), upper: T::two() },
        (false, true) => RangeCell { label: "2<V12<min{V1,4-V2}", lower: T::two(), upper: min(v1, four - v2) },
        (true, false) => RangeCell { label: "2<V12<min{4-V1,V2}", lower: T::two(), upper: min(four - v1, v2) },
        (false, false) => {
            RangeCell { label: "max{4-V1,4-V2}<V12<2", lower: max(four.clone() - v1, four - v2), upper: T::two() }
        }
    };
    Ok(cell)
}

/// Per-step variances of the reference accumulation curves.
pub const CURVE_SIGMAS: [f64; 5] = [0.1, 0.075, 0.05, 0.025, 0.01];
pub const CURVE_K_MAX: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub k: usize,
    pub sigma: f64,
    pub variance: f64,
}

/// Accumulation curves `k ↦ 2 - 2(1 - σ/2)^k`, series by series.
pub fn figure2_data(sigmas: &[f64], k_max: usize) -> Result<Vec<CurvePoint>> {
    if k_max == 0 {
        return Err(Error::invalid("k_max must be >= 1"));
    }
    let mut rows = Vec::with_capacity(sigmas.len() * k_max);
    for &sigma in sigmas {
        for k in 1..=k_max {
            rows.push(CurvePoint { k, sigma, variance: accumulate_equal(sigma, k)? });
        }
    }
    Ok(rows)
}
