//! Density and variance of the sum of two independent errors.
//!
//! The sum `X1 + X2` draws `X1` around the pole and then `X2` around `X1`.
//! For isotropic laws its density at angle `θ0` is
//!
//! ```text
//! f(θ0) = |S^{d-2}| ∫∫ f1(θ0') f2(β) sin^{d-1}θ0' sin^{d-2}θ1' dθ0' dθ1'
//! ```
//!
//! with `β` the inner product between the evaluation point and the inner
//! center. On the circle it is the ordinary convolution over rotations.

use std::f64::consts::PI;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::densities::{tensor_sum, zonal_rule, DensityProfile, GeneralDensity, VarianceMethod, VarianceReport};
use crate::error::{Error, Result};
use crate::quadrature::{pairwise_sum, AxisRule, QuadratureConfig, Refined};
use crate::sphere::{dfact_ratio, polar_coords, ratio_to_real, sphere_surface};

/// Depth beyond which the reduced tensor quadrature is refused.
pub const MAX_GENERAL_DEPTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvolveConfig {
    pub quadrature: QuadratureConfig,
    /// Points of the `θ0` table holding the sum density.
    pub grid: usize,
}

impl Default for ConvolveConfig {
    fn default() -> Self {
        ConvolveConfig { quadrature: QuadratureConfig::nested(), grid: 512 }
    }
}

#[derive(Debug, Clone)]
pub struct ConvolutionResult {
    /// Tabulated sum density on the same sphere.
    pub profile: DensityProfile,
    /// Variance of the sum from the convolution integral itself.
    pub variance: VarianceReport,
    /// Nodes per axis at which the variance integral settled.
    pub nodes: usize,
    /// Gap between the last two refinement levels of the variance integral.
    pub delta: f64,
    /// `|∫ table - 1|` before the table was renormalized.
    pub mass_error: f64,
}

fn check_pair(f1: &DensityProfile, f2: &DensityProfile) -> Result<usize> {
    if f1.d() != f2.d() {
        return Err(Error::DimensionMismatch { expected: f1.d(), found: f2.d() });
    }
    Ok(f1.d())
}

/// Rule on `[0, π]` with `sin^power` folded in, optionally scaled.
fn sine_rule(cfg: &QuadratureConfig, nodes: usize, power: usize, scale: f64) -> AxisRule {
    let mut rule = cfg.axis(0.0, PI, nodes);
    for (w, &t) in rule.weights.iter_mut().zip(&rule.points) {
        *w *= scale * t.sin().powi(power as i32);
    }
    rule
}

/// `cos` of the angle between `(θ0, θ1)` and the inner center at `θ0'`,
/// from the reconstructed points.
fn beta(theta0: f64, theta1: f64, inner0: f64) -> f64 {
    let x = polar_coords(&[theta0, theta1]);
    let c = polar_coords(&[inner0, 0.0]);
    let dot: f64 = x.iter().zip(&c).map(|(a, b)| a * b).sum();
    dot.clamp(-1.0, 1.0)
}

/// `f(θ0)` of the sum at one angle with `nodes` per inner axis.
fn sum_density_at(f1: &DensityProfile, f2: &DensityProfile, theta0: f64, nodes: usize, cfg: &QuadratureConfig) -> f64 {
    let d = f1.d();
    let outer = sine_rule(cfg, nodes, d - 1, sphere_surface::<f64>(d - 2));
    let inner = sine_rule(cfg, nodes, d - 2, 1.0);
    let terms: Vec<f64> = outer
        .iter()
        .map(|(t0p, w0)| {
            let f1v = f1.value(t0p);
            let row: Vec<f64> = inner.iter().map(|(t1p, w1)| w1 * f2.value(beta(theta0, t1p, t0p).acos())).collect();
            w0 * f1v * pairwise_sum(&row)
        })
        .collect();
    pairwise_sum(&terms)
}

/// `E[cos θ0]` of the sum as a refined triple integral.
fn sum_mean_cos(f1: &DensityProfile, f2: &DensityProfile, cfg: &QuadratureConfig) -> Result<Refined> {
    let d = f1.d();
    cfg.refine(|nodes| {
        let rules = [
            zonal_rule(d, cfg, nodes, None),
            sine_rule(cfg, nodes, d - 1, sphere_surface::<f64>(d - 2)),
            sine_rule(cfg, nodes, d - 2, 1.0),
        ];
        Ok(tensor_sum(&rules, &|a: &[f64]| a[0].cos() * f1.value(a[1]) * f2.value(beta(a[0], a[2], a[1]).acos())))
    })
}

/// Tabulated density and variance of the sum of two isotropic errors on
/// `S^d`, `d >= 2`.
pub fn sum_density_isotropic(
    f1: &DensityProfile,
    f2: &DensityProfile,
    cfg: &ConvolveConfig,
) -> Result<ConvolutionResult> {
    let d = check_pair(f1, f2)?;
    if d < 2 {
        return Err(Error::invalid("use sum_density_circle on S^1"));
    }
    if !f1.is_isotropic() || !f2.is_isotropic() {
        return Err(Error::invalid("both summands must be isotropic"));
    }
    validate_grid(cfg)?;
    let q = &cfg.quadrature;
    let mean = sum_mean_cos(f1, f2, q)?;
    let grid: Vec<f64> = (0..cfg.grid).map(|i| PI * i as f64 / (cfg.grid - 1) as f64).collect();
    let values: Vec<f64> = grid.par_iter().map(|&t| sum_density_at(f1, f2, t, mean.nodes, q)).collect();
    finish(d, grid, values, mean, f1, f2)
}

fn validate_grid(cfg: &ConvolveConfig) -> Result<()> {
    if cfg.grid < 8 {
        return Err(Error::invalid("the sum density table needs >= 8 points"));
    }
    cfg.quadrature.validate()
}

fn finish(
    d: usize,
    grid: Vec<f64>,
    values: Vec<f64>,
    mean: Refined,
    f1: &DensityProfile,
    f2: &DensityProfile,
) -> Result<ConvolutionResult> {
    let table: Vec<(f64, f64)> = grid.into_iter().zip(values).map(|(t, v)| (t, v.max(0.0))).collect();
    let profile = DensityProfile::tabulated(d, &table)?;
    let mass_error = (profile.normalization() - 1.0).abs();
    let variance = VarianceReport::new(
        2.0 - 2.0 * mean.value,
        VarianceMethod::Quadrature,
        2.0 * mean.delta,
        format!("sum of {} and {}", f1.label(), f2.label()),
    )?;
    Ok(ConvolutionResult { profile, variance, nodes: mean.nodes, delta: mean.delta, mass_error })
}

/// Sum of two errors on the circle, `f(θ) = ∫ f1(θ') f2(θ - θ') dθ'`.
/// Neither summand needs to be symmetric; the table covers `[-π, π]`.
pub fn sum_density_circle(f1: &DensityProfile, f2: &DensityProfile, cfg: &ConvolveConfig) -> Result<ConvolutionResult> {
    let d = check_pair(f1, f2)?;
    if d != 1 {
        return Err(Error::invalid(format!("sum_density_circle needs d = 1, got {d}")));
    }
    validate_grid(cfg)?;
    let q = &cfg.quadrature;
    let mean = sum_mean(f1, f2, q)?;
    let grid: Vec<f64> = (0..cfg.grid).map(|i| -PI + 2.0 * PI * i as f64 / (cfg.grid - 1) as f64).collect();
    let values: Vec<f64> =
        grid.par_iter().map(|&t| f1.rule(q, mean.nodes).integrate(|s| f1.value(s) * f2.value(wrap(t - s)))).collect();
    finish(1, grid, values, mean, f1, f2)
}

fn wrap(t: f64) -> f64 {
    let mut t = t;
    while t > PI {
        t -= 2.0 * PI;
    }
    while t < -PI {
        t += 2.0 * PI;
    }
    t
}

fn sum_mean(f1: &DensityProfile, f2: &DensityProfile, cfg: &QuadratureConfig) -> Result<Refined> {
    let d = check_pair(f1, f2)?;
    if d == 1 {
        // θ = θ' + φ with φ ~ f2; periodicity keeps both axes on [-π, π]
        return cfg.refine(|nodes| {
            let rules = [f1.rule(cfg, nodes), f2.rule(cfg, nodes)];
            Ok(tensor_sum(&rules, &|a: &[f64]| (a[0] + a[1]).cos() * f1.value(a[0]) * f2.value(a[1])))
        });
    }
    if !f1.is_isotropic() || !f2.is_isotropic() {
        return Err(Error::invalid("both summands must be isotropic"));
    }
    sum_mean_cos(f1, f2, cfg)
}

/// Variance of the sum without tabulating its density.
pub fn sum_variance(f1: &DensityProfile, f2: &DensityProfile, cfg: &QuadratureConfig) -> Result<VarianceReport> {
    let mean = sum_mean(f1, f2, cfg)?;
    VarianceReport::new(
        2.0 - 2.0 * mean.value,
        VarianceMethod::Quadrature,
        2.0 * mean.delta,
        format!("sum of {} and {}", f1.label(), f2.label()),
    )
}

/// Variance of `X1 + X2` with `X1` of depth `m <= 3` and `X2` isotropic.
///
/// The inner integral `H(θ0') = ∫ cos θ0 f2(β) dS`, taken with the inner
/// center at angle `θ0'`, only depends on `θ0'`; it is tabulated at the
/// outer nodes and the outer integral runs over the active angles of `f1`.
pub fn sum_variance_general(
    f1: &GeneralDensity,
    f2: &DensityProfile,
    cfg: &QuadratureConfig,
) -> Result<VarianceReport> {
    if f1.d() != f2.d() {
        return Err(Error::DimensionMismatch { expected: f1.d(), found: f2.d() });
    }
    if f1.depth() > MAX_GENERAL_DEPTH {
        return Err(Error::Guard(format!(
            "depth {} exceeds the limit of {MAX_GENERAL_DEPTH} for the general sum",
            f1.depth()
        )));
    }
    if !f2.is_isotropic() {
        return Err(Error::invalid("the second summand must be isotropic"));
    }
    let d = f1.d();
    let (m, surface) = (f1.depth(), sphere_surface::<f64>(d - f1.depth()));
    let mean = cfg.refine(|nodes| {
        let rules: Vec<AxisRule> = (0..m).map(|j| sine_rule(cfg, nodes, d - 1 - j, 1.0)).collect();
        let outer_points = rules[0].points.clone();
        let inner = [sine_rule(cfg, nodes, d - 1, 1.0), sine_rule(cfg, nodes, d - 2, sphere_surface::<f64>(d - 2))];
        let h: Vec<f64> = outer_points
            .par_iter()
            .map(|&t0p| {
                let terms: Vec<f64> = inner[0]
                    .iter()
                    .map(|(t0, w0)| {
                        let row: Vec<f64> =
                            inner[1].iter().map(|(t1, w1)| w1 * f2.value(beta(t0, t1, t0p).acos())).collect();
                        w0 * t0.cos() * pairwise_sum(&row)
                    })
                    .collect();
                pairwise_sum(&terms)
            })
            .collect();
        let lookup = |t: f64| {
            let i = outer_points.partition_point(|&p| p < t);
            h[i]
        };
        Ok(surface * tensor_sum(&rules, &|a: &[f64]| f1.value(a) * lookup(a[0])))
    })?;
    VarianceReport::new(
        2.0 - 2.0 * mean.value,
        VarianceMethod::Quadrature,
        2.0 * mean.delta,
        format!("sum of {} and {}", f1.label(), f2.label()),
    )
}

/// Both sides of the variance-sum law for `g_k + g_l` on `S^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub k: u32,
    pub l: u32,
    pub d: usize,
    /// Variance of the sum by convolution quadrature.
    pub lhs: f64,
    /// Closed-form right side as an exact rational.
    #[serde(serialize_with = "crate::identities::serialize_ratio")]
    pub rhs_exact: BigRational,
    pub rhs: f64,
    pub gap: f64,
    pub nodes: usize,
}

/// `2 - 2 k!! l!! ((d-1)!!)² / ((k+d)!! (l+d)!!)` for odd `k, l`, else `2`.
pub fn lemma_rhs_exact(k: u32, l: u32, d: usize) -> BigRational {
    let two = BigRational::from_integer(2.into());
    if k % 2 == 0 || l % 2 == 0 {
        return two;
    }
    let (k, l, d) = (k as i64, l as i64, d as i64);
    &two - &two * dfact_ratio(&[k, l, d - 1, d - 1], &[k + d, l + d])
}

pub fn verify_variance_lemma(k: u32, l: u32, d: usize, cfg: &QuadratureConfig) -> Result<LemmaReport> {
    let f1 = DensityProfile::cos_power(d, k)?;
    let f2 = DensityProfile::cos_power(d, l)?;
    let mean = sum_mean(&f1, &f2, cfg)?;
    let lhs = 2.0 - 2.0 * mean.value;
    let rhs_exact = lemma_rhs_exact(k, l, d);
    let rhs = ratio_to_real::<f64>(&rhs_exact);
    Ok(LemmaReport { k, l, d, lhs, gap: (lhs - rhs).abs(), rhs, rhs_exact, nodes: mean.nodes })
}
