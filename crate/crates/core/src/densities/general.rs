//! Densities that depend on the first `m` polar angles.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::{DensityProfile, VarianceMethod, VarianceReport};
use crate::error::{Error, Result};
use crate::quadrature::{pairwise_sum, AxisRule, QuadratureConfig, Refined};
use crate::sphere::sphere_surface;

pub type GeneralProfileFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Beyond this depth the tensor rules get too large to refine.
const MAX_TENSOR_DEPTH: usize = 4;

/// `2π⁴/3`, the normalization of the depth-3 example on `S^7`.
pub const S7_EXAMPLE_NORMALIZATION: f64 = 2.0 * PI * PI * PI * PI / 3.0;

/// A density on `S^d` depending on `(θ0, …, θ_{m-1})` with `1 <= m <= d-1`.
/// The active angles all range over `[0, π]`; the trailing `d - m`
/// dimensions contribute the surface factor `|S^{d-m}|`.
#[derive(Clone)]
pub struct GeneralDensity {
    d: usize,
    depth: usize,
    profile: GeneralProfileFn,
    normalization: f64,
}

impl fmt::Debug for GeneralDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralDensity")
            .field("d", &self.d)
            .field("depth", &self.depth)
            .field("normalization", &self.normalization)
            .finish()
    }
}

/// `∫ h(θ_0..θ_{m-1}) Π sin^{d-1-j} θ_j` over the active angles, times
/// `|S^{d-m}|`.
pub(crate) fn tensor_integrate(
    d: usize,
    depth: usize,
    cfg: &QuadratureConfig,
    h: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Result<Refined> {
    let surface = sphere_surface::<f64>(d - depth);
    cfg.refine(|nodes| {
        let rules: Vec<AxisRule> = (0..depth)
            .map(|j| {
                let mut r = cfg.axis(0.0, PI, nodes);
                let power = (d - 1 - j) as i32;
                for (w, &t) in r.weights.iter_mut().zip(&r.points) {
                    *w *= t.sin().powi(power);
                }
                r
            })
            .collect();
        Ok(surface * tensor_sum(&rules, h))
    })
}

/// Deterministic tensor-product sum; the outer axis runs in parallel and
/// partial sums are combined in index order.
pub(crate) fn tensor_sum(rules: &[AxisRule], h: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
    let outer = &rules[0];
    let partials: Vec<f64> = outer
        .points
        .par_iter()
        .zip(outer.weights.par_iter())
        .map(|(&t0, &w0)| {
            let mut angles = vec![0.0; rules.len()];
            angles[0] = t0;
            w0 * inner_sum(&rules[1..], &mut angles, 1, h)
        })
        .collect();
    pairwise_sum(&partials)
}

fn inner_sum(rules: &[AxisRule], angles: &mut Vec<f64>, at: usize, h: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
    if rules.is_empty() {
        return h(angles);
    }
    let mut terms = Vec::with_capacity(rules[0].len());
    for (t, w) in rules[0].iter() {
        angles[at] = t;
        terms.push(w * inner_sum(&rules[1..], angles, at + 1, h));
    }
    pairwise_sum(&terms)
}

impl GeneralDensity {
    /// Normalizes `profile` by tensor quadrature and audits nonnegativity on
    /// a grid over the active angles.
    pub fn new(d: usize, depth: usize, profile: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Self::validate_shape(d, depth)?;
        let profile: GeneralProfileFn = Arc::new(profile);
        let cfg = QuadratureConfig::nested();
        let mass = tensor_integrate(d, depth, &cfg, &|a: &[f64]| profile(a))?;
        if !(mass.value > 0.0) || !mass.value.is_finite() {
            return Err(Error::NonNormalizable { integral: mass.value });
        }
        let density = GeneralDensity { d, depth, profile, normalization: mass.value };
        density.audit_sign()?;
        Ok(density)
    }

    /// Uses a known normalization constant and checks it against quadrature.
    pub fn with_normalization(
        d: usize,
        depth: usize,
        normalization: f64,
        profile: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::validate_shape(d, depth)?;
        let profile: GeneralProfileFn = Arc::new(profile);
        let density = GeneralDensity { d, depth, profile, normalization };
        let cfg = QuadratureConfig::nested();
        let mass = density.integrate(&cfg, &|_| 1.0)?;
        if (mass.value - 1.0).abs() > 10.0 * cfg.tolerance {
            return Err(Error::NonNormalizable { integral: mass.value * normalization });
        }
        density.audit_sign()?;
        Ok(density)
    }

    /// Depth-1 view of an isotropic profile (needs `d >= 2`).
    pub fn from_isotropic(profile: &DensityProfile) -> Result<Self> {
        let inner = profile.clone();
        Self::with_normalization(profile.d(), 1, 1.0, move |a: &[f64]| inner.value(a[0]))
    }

    fn validate_shape(d: usize, depth: usize) -> Result<()> {
        if depth == 0 || depth + 1 > d {
            return Err(Error::invalid(format!("depth {depth} must satisfy 1 <= depth <= d - 1 = {}", d as i64 - 1)));
        }
        if depth > MAX_TENSOR_DEPTH {
            return Err(Error::Guard(format!(
                "depth {depth} exceeds the tensor quadrature limit of {MAX_TENSOR_DEPTH}"
            )));
        }
        Ok(())
    }

    fn audit_sign(&self) -> Result<()> {
        let per_axis = grid_per_axis(self.depth, 1 << 15);
        let mut bad = None;
        for_each_grid_point(self.depth, per_axis, |a| {
            if bad.is_none() {
                let v = self.value(a);
                if !v.is_finite() || v < -1e-12 {
                    bad = Some(Error::NegativeDensity { angle: a[0], value: v });
                }
            }
        });
        bad.map_or(Ok(()), Err)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Density at the active angles, without range checks.
    pub fn value(&self, angles: &[f64]) -> f64 {
        (self.profile)(angles) / self.normalization
    }

    /// Density at a point given by polar angles; angles past the depth are
    /// ignored, missing ones are an error.
    pub fn evaluate(&self, angles: &[f64]) -> Result<f64> {
        if angles.len() < self.depth || angles.len() > self.d {
            return Err(Error::DimensionMismatch { expected: self.depth, found: angles.len() });
        }
        for &a in &angles[..self.depth] {
            if !(-1e-12..=PI + 1e-12).contains(&a) {
                return Err(Error::invalid(format!("angle {a} outside [0, pi]")));
            }
        }
        Ok(self.value(&angles[..self.depth]))
    }

    /// Refined `E[h(θ_0..θ_{m-1})]`.
    pub fn integrate(&self, cfg: &QuadratureConfig, h: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<Refined> {
        tensor_integrate(self.d, self.depth, cfg, &|a: &[f64]| self.value(a) * h(a))
    }

    /// Upper bound estimate of the density from a grid over the active angles.
    pub fn sup_on_grid(&self, points: usize) -> f64 {
        let per_axis = grid_per_axis(self.depth, points);
        let mut sup = 0.0f64;
        for_each_grid_point(self.depth, per_axis, |a| sup = sup.max(self.value(a)));
        sup
    }

    pub fn label(&self) -> String {
        format!("general density on S^{} of depth {}", self.d, self.depth)
    }
}

fn grid_per_axis(depth: usize, budget: usize) -> usize {
    ((budget as f64).powf(1.0 / depth as f64).floor() as usize).max(4)
}

fn for_each_grid_point(depth: usize, per_axis: usize, mut f: impl FnMut(&[f64])) {
    let mut idx = vec![0usize; depth];
    let mut angles = vec![0.0; depth];
    loop {
        for (a, &i) in angles.iter_mut().zip(&idx) {
            *a = PI * i as f64 / (per_axis - 1) as f64;
        }
        f(&angles);
        let mut j = 0;
        loop {
            if j == depth {
                return;
            }
            idx[j] += 1;
            if idx[j] < per_axis {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// `V(X) = 2 - 2 E[cos θ0]` by tensor quadrature over the active angles.
pub fn general_variance(density: &GeneralDensity, cfg: &QuadratureConfig) -> Result<VarianceReport> {
    let mean_cos = density.integrate(cfg, &|a: &[f64]| a[0].cos())?;
    VarianceReport::new(2.0 - 2.0 * mean_cos.value, VarianceMethod::Quadrature, 2.0 * mean_cos.delta, density.label())
}

/// `(2 + cos θ0 sin² θ1 + cos θ1 sin θ2) / (2π⁴/3)` on `S^7`.
pub fn s7_example_g1() -> GeneralDensity {
    GeneralDensity::with_normalization(7, 3, S7_EXAMPLE_NORMALIZATION, |a: &[f64]| {
        2.0 + a[0].cos() * a[1].sin().powi(2) + a[1].cos() * a[2].sin()
    })
    .expect("the S^7 example is a valid density")
}
