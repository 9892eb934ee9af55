//! Error densities on `S^d` and their normalizations and variances.
//!
//! Isotropic densities are functions of the first polar angle `θ0` only (on
//! the circle, of the signed angle, symmetric for the isotropic kinds). The
//! variance of an error centered on the pole is `V = 2 - 2 E[cos θ0]`.

mod fit;
mod general;
mod interp;
mod spec;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{AxisRule, QuadratureConfig, Refined};
use crate::sphere::{dfact_ratio, ratio_to_real, sphere_surface, wallis_integral};

pub use fit::{fit_cos_power_mixture, CosPowerFit, DEFAULT_FIT_ORDER};
pub(crate) use general::tensor_sum;
pub use general::{general_variance, s7_example_g1, GeneralDensity, GeneralProfileFn, S7_EXAMPLE_NORMALIZATION};
pub use interp::MonotoneCubic;
pub use spec::DensitySpec;

/// Grid size for the nonnegativity audit run at construction.
const AUDIT_GRID: usize = 1024;
const NEGATIVE_SLACK: f64 = -1e-12;

/// A basis element of a [`DensityKind::Mixture`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "k", rename_all = "lowercase")]
pub enum Component {
    /// `(1 + cos^k θ0) / V_k`
    CosPower(u32),
    /// `(1 + sin^k θ0) / V_k`, circle only
    SinPower(u32),
}

pub type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum DensityKind {
    Uniform,
    /// Unnormalized `1 + cos^k θ0`.
    CosPower {
        k: u32,
    },
    /// Unnormalized `1 + sin^k θ0` on the circle.
    SinPower {
        k: u32,
    },
    /// Unnormalized `(1 - σ²) / (1 + σ² - 2σ cos θ0)^q` on `S^{2q-1}`.
    Sigma {
        sigma: f64,
        q: u32,
    },
    /// `Σ w_i g_i` over normalized basis densities; weights may be negative
    /// as long as the combination stays pointwise nonnegative.
    Mixture {
        weights: Vec<f64>,
        components: Vec<Component>,
    },
    /// Monotone-cubic interpolation of `(θ0, value)` samples on `[0, π]`.
    Tabulated(MonotoneCubic),
    Closure(ProfileFn),
}

impl fmt::Debug for DensityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityKind::Uniform => write!(f, "Uniform"),
            DensityKind::CosPower { k } => write!(f, "CosPower({k})"),
            DensityKind::SinPower { k } => write!(f, "SinPower({k})"),
            DensityKind::Sigma { sigma, q } => write!(f, "Sigma(sigma={sigma}, q={q})"),
            DensityKind::Mixture { weights, components } => {
                write!(f, "Mixture({weights:?}, {components:?})")
            }
            DensityKind::Tabulated(t) => write!(f, "Tabulated({} nodes)", t.xs().len()),
            DensityKind::Closure(_) => write!(f, "Closure"),
        }
    }
}

/// A normalized density on `S^d` that depends on `θ0` only.
#[derive(Debug, Clone)]
pub struct DensityProfile {
    d: usize,
    kind: DensityKind,
    /// `∫_{S^d} raw dS`; the density is `raw / normalization`.
    normalization: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceReport {
    pub value: f64,
    pub method: VarianceMethod,
    /// Quadrature refinement gap or Monte Carlo standard error; zero for
    /// closed forms.
    pub error_estimate: f64,
    pub inputs: String,
}

impl VarianceReport {
    pub(crate) fn new(value: f64, method: VarianceMethod, error_estimate: f64, inputs: String) -> Result<Self> {
        let value = clamp_variance(value)?;
        Ok(VarianceReport { value, method, error_estimate, inputs })
    }
}

pub(crate) fn clamp_variance(v: f64) -> Result<f64> {
    if !v.is_finite() || !(-1e-9..=4.0 + 1e-9).contains(&v) {
        return Err(Error::invalid(format!("variance {v} is outside [0, 4]")));
    }
    Ok(v.clamp(0.0, 4.0))
}

/// Rule for `∫_{S^d} h(θ0) dS` with the surface factor folded into the weights:
/// `|S^{d-1}| sin^{d-1} θ0 dθ0` on `[0, π]`, or plain `dθ0` on `[-π, π]` for
/// the circle. With `knots`, panels follow the knot intervals once there are
/// at least 4 nodes per interval; coarser levels use the plain rule.
pub(crate) fn zonal_rule(d: usize, cfg: &QuadratureConfig, nodes: usize, knots: Option<&[f64]>) -> AxisRule {
    let edges = knots.map(|knots| {
        if d == 1 && knots[0] >= 0.0 {
            let mut mirrored: Vec<f64> = knots.iter().rev().map(|k| -k).collect();
            mirrored.extend(knots.iter().filter(|&&k| k > 0.0));
            mirrored
        } else {
            knots.to_vec()
        }
    });
    let edges = edges.filter(|e| e.len() >= 2 && nodes / (e.len() - 1) >= 4);
    let mut rule = match edges {
        Some(edges) => {
            let per = nodes / (edges.len() - 1);
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for w in edges.windows(2) {
                let piece = AxisRule::composite(w[0], w[1], 1, per);
                points.extend(piece.points);
                weights.extend(piece.weights);
            }
            AxisRule { points, weights }
        }
        None if d == 1 => cfg.axis(-PI, PI, nodes),
        None => cfg.axis(0.0, PI, nodes),
    };
    if d >= 2 {
        let surface = sphere_surface::<f64>(d - 1);
        for (w, &t) in rule.weights.iter_mut().zip(&rule.points) {
            *w *= surface * t.sin().powi(d as i32 - 1);
        }
    }
    rule
}

/// Closed-form `V_k = ∫_{S^d} (1 + cos^k θ0) dS`.
pub fn cos_power_normalization(k: u32, d: usize) -> f64 {
    let surface = sphere_surface::<f64>(d - 1);
    let b = d as u32 - 1;
    surface * (wallis_integral::<f64>(0, b) + wallis_integral::<f64>(k, b))
}

/// `V(g_k) = 2 - 2 k!!(d-1)!!/(k+d)!!` for odd `k`, and `2` for even `k`.
pub fn closed_form_variance_cospower(k: u32, d: usize) -> BigRational {
    let two = BigRational::from_integer(2.into());
    if k % 2 == 0 {
        return two;
    }
    let (k, d) = (k as i64, d as i64);
    let ratio = dfact_ratio(&[k, d - 1], &[k + d]);
    &two - &two * ratio
}

/// Normalization constant of the raw profile of `kind` on `S^d`.
pub fn normalization_constant(kind: &DensityKind, d: usize, cfg: &QuadratureConfig) -> Result<f64> {
    validate_kind(kind, d)?;
    match kind {
        DensityKind::Uniform => Ok(sphere_surface(d)),
        DensityKind::CosPower { k } | DensityKind::SinPower { k } => Ok(cos_power_normalization(*k, d)),
        // (2π)^q / (2q-2)!! = |S^{2q-1}|; the audit checks it by quadrature
        DensityKind::Sigma { .. } => Ok(sphere_surface(d)),
        DensityKind::Mixture { .. } => Ok(1.0),
        _ => {
            let value = integrate_raw(kind, d, cfg, |_| 1.0)?.value;
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonNormalizable { integral: value });
            }
            Ok(value)
        }
    }
}

fn validate_kind(kind: &DensityKind, d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::invalid("densities live on S^d with d >= 1"));
    }
    match kind {
        DensityKind::SinPower { k } => {
            if d != 1 {
                return Err(Error::invalid("sin-power densities are only defined on the circle S^1"));
            }
            if *k == 0 {
                return Err(Error::invalid("sin-power exponent must be >= 1"));
            }
        }
        DensityKind::Sigma { sigma, q } => {
            if !(*sigma > 0.0 && *sigma < 1.0) {
                return Err(Error::invalid(format!("sigma = {sigma} must lie in (0, 1)")));
            }
            if !q.is_power_of_two() {
                return Err(Error::invalid(format!("q = {q} must be a power of two")));
            }
            if d != 2 * *q as usize - 1 {
                return Err(Error::invalid(format!("the sigma family with q = {q} lives on S^{}", 2 * q - 1)));
            }
        }
        DensityKind::Mixture { weights, components } => {
            if weights.len() != components.len() || weights.is_empty() {
                return Err(Error::invalid("mixture needs one weight per component"));
            }
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("mixture weights sum to {total}, not 1")));
            }
            for c in components {
                if let Component::SinPower(k) = c {
                    if d != 1 || *k == 0 {
                        return Err(Error::invalid("sin-power components need d = 1 and k >= 1"));
                    }
                }
            }
        }
        DensityKind::Tabulated(t) => {
            let xs = t.xs();
            let spans = |lo: f64| (xs[0] - lo).abs() <= 1e-12 && (xs[xs.len() - 1] - PI).abs() <= 1e-12;
            if !(spans(0.0) || (d == 1 && spans(-PI))) {
                return Err(Error::invalid("tabulated grid must span theta0 in [0, pi] (or [-pi, pi] on the circle)"));
            }
        }
        _ => {}
    }
    Ok(())
}

fn raw_value(kind: &DensityKind, d: usize, theta: f64) -> f64 {
    match kind {
        DensityKind::Uniform => 1.0,
        DensityKind::CosPower { k } => 1.0 + theta.cos().powi(*k as i32),
        DensityKind::SinPower { k } => 1.0 + theta.sin().powi(*k as i32),
        DensityKind::Sigma { sigma, q } => {
            let s = *sigma;
            (1.0 - s * s) / (1.0 + s * s - 2.0 * s * theta.cos()).powi(*q as i32)
        }
        DensityKind::Mixture { weights, components } => {
            weights.iter().zip(components).map(|(w, c)| w * component_value(*c, d, theta)).sum()
        }
        DensityKind::Tabulated(t) if t.xs()[0] < 0.0 => t.eval(theta),
        DensityKind::Tabulated(t) => t.eval(theta.abs()),
        DensityKind::Closure(f) => f(theta),
    }
}

fn component_value(c: Component, d: usize, theta: f64) -> f64 {
    match c {
        Component::CosPower(k) => (1.0 + theta.cos().powi(k as i32)) / cos_power_normalization(k, d),
        Component::SinPower(k) => (1.0 + theta.sin().powi(k as i32)) / cos_power_normalization(k, d),
    }
}

fn knots_of(kind: &DensityKind) -> Option<&[f64]> {
    match kind {
        DensityKind::Tabulated(t) => Some(t.xs()),
        _ => None,
    }
}

/// Refined `∫_{S^d} raw(θ0) h(θ0) dS`.
fn integrate_raw(kind: &DensityKind, d: usize, cfg: &QuadratureConfig, h: impl Fn(f64) -> f64) -> Result<Refined> {
    cfg.refine(|nodes| {
        let rule = zonal_rule(d, cfg, nodes, knots_of(kind));
        Ok(rule.integrate(|t| raw_value(kind, d, t) * h(t)))
    })
}

impl DensityProfile {
    fn build(d: usize, kind: DensityKind) -> Result<Self> {
        let cfg = QuadratureConfig::default();
        let normalization = normalization_constant(&kind, d, &cfg)?;
        let profile = DensityProfile { d, kind, normalization };
        profile.audit(&cfg)?;
        Ok(profile)
    }

    /// Rule for `∫_{S^d} h(θ0) dS` that respects the table knots, if any.
    pub(crate) fn rule(&self, cfg: &QuadratureConfig, nodes: usize) -> AxisRule {
        zonal_rule(self.d, cfg, nodes, knots_of(&self.kind))
    }

    /// Nonnegativity on a fine grid and total mass 1.
    fn audit(&self, cfg: &QuadratureConfig) -> Result<()> {
        let (lo, hi) = self.angle_range();
        for i in 0..=AUDIT_GRID {
            let t = lo + (hi - lo) * i as f64 / AUDIT_GRID as f64;
            let v = self.value(t);
            if !v.is_finite() || v < NEGATIVE_SLACK {
                return Err(Error::NegativeDensity { angle: t, value: v });
            }
        }
        let mass = self.integrate(cfg, |_| 1.0)?;
        if (mass.value - 1.0).abs() > 10.0 * cfg.tolerance.max(1e-12) {
            return Err(Error::NonNormalizable { integral: mass.value });
        }
        Ok(())
    }

    pub fn uniform(d: usize) -> Result<Self> {
        Self::build(d, DensityKind::Uniform)
    }

    /// `g_k = (1 + cos^k θ0) / V_k`.
    pub fn cos_power(d: usize, k: u32) -> Result<Self> {
        Self::build(d, DensityKind::CosPower { k })
    }

    /// `h_k = (1 + sin^k θ0) / V_k` on the circle.
    pub fn sin_power(k: u32) -> Result<Self> {
        Self::build(1, DensityKind::SinPower { k })
    }

    /// The Poisson-kernel family on `S^{2q-1}` with variance `2(1 - σ)`.
    pub fn sigma_family(sigma: f64, q: u32) -> Result<Self> {
        if q == 0 {
            return Err(Error::invalid("q must be >= 1"));
        }
        Self::build(2 * q as usize - 1, DensityKind::Sigma { sigma, q })
    }

    pub fn mixture(d: usize, weights: Vec<f64>, components: Vec<Component>) -> Result<Self> {
        Self::build(d, DensityKind::Mixture { weights, components })
    }

    /// Profile from `(θ0, value)` samples on `[0, π]`, renormalized to mass 1.
    /// On the circle the grid may instead cover `[-π, π]` for asymmetric
    /// profiles.
    pub fn tabulated(d: usize, grid: &[(f64, f64)]) -> Result<Self> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = grid.iter().copied().unzip();
        Self::build(d, DensityKind::Tabulated(MonotoneCubic::new(xs, ys)?))
    }

    /// Arbitrary profile of `θ0` (the signed angle on the circle).
    pub fn closure(d: usize, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Self::build(d, DensityKind::Closure(Arc::new(f)))
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Range of the angle argument: `[0, π]`, or `[-π, π]` on the circle.
    pub fn angle_range(&self) -> (f64, f64) {
        if self.d == 1 {
            (-PI, PI)
        } else {
            (0.0, PI)
        }
    }

    /// Symmetric under `θ0 → -θ0` on the circle; always true for `d >= 2`.
    pub fn is_isotropic(&self) -> bool {
        match &self.kind {
            DensityKind::SinPower { .. } => false,
            DensityKind::Mixture { components, weights } => {
                components.iter().zip(weights).all(|(c, w)| matches!(c, Component::CosPower(_)) || *w == 0.0)
            }
            DensityKind::Closure(_) | DensityKind::Tabulated(_) if self.d == 1 => (0..=64).all(|i| {
                let t = PI * i as f64 / 64.0;
                let (a, b) = (self.value(t), self.value(-t));
                (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1e-300)
            }),
            _ => true,
        }
    }

    /// Density value at `θ0` without range checks.
    pub fn value(&self, theta0: f64) -> f64 {
        raw_value(&self.kind, self.d, theta0) / self.normalization
    }

    /// Density value at a point given by its polar angles; only `θ0` matters.
    pub fn evaluate(&self, angles: &[f64]) -> Result<f64> {
        let theta0 = *angles.first().ok_or_else(|| Error::invalid("no angles given"))?;
        if angles.len() > self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: angles.len() });
        }
        let (lo, hi) = self.angle_range();
        if !(theta0 >= lo - 1e-12 && theta0 <= hi + 1e-12) {
            return Err(Error::invalid(format!("theta0 = {theta0} outside [{lo}, {hi}]")));
        }
        Ok(self.value(theta0))
    }

    /// Refined `∫_{S^d} f(θ0) h(θ0) dS`.
    pub fn integrate(&self, cfg: &QuadratureConfig, h: impl Fn(f64) -> f64) -> Result<Refined> {
        let r = integrate_raw(&self.kind, self.d, cfg, h)?;
        Ok(Refined { value: r.value / self.normalization, delta: r.delta / self.normalization, nodes: r.nodes })
    }

    pub fn label(&self) -> String {
        format!("{:?} on S^{}", self.kind, self.d)
    }
}

/// `V(X) = 2 - 2 E[cos θ0]`; closed forms for uniform and cos-power kinds.
pub fn variance(profile: &DensityProfile, cfg: &QuadratureConfig) -> Result<VarianceReport> {
    match profile.kind() {
        DensityKind::Uniform => VarianceReport::new(2.0, VarianceMethod::ClosedForm, 0.0, profile.label()),
        DensityKind::CosPower { k } => {
            let v = ratio_to_real::<f64>(&closed_form_variance_cospower(*k, profile.d()));
            VarianceReport::new(v, VarianceMethod::ClosedForm, 0.0, profile.label())
        }
        _ => variance_by_quadrature(profile, cfg),
    }
}

/// Quadrature route for every kind, used to audit the closed forms.
pub fn variance_by_quadrature(profile: &DensityProfile, cfg: &QuadratureConfig) -> Result<VarianceReport> {
    let mean_cos = profile.integrate(cfg, f64::cos)?;
    VarianceReport::new(2.0 - 2.0 * mean_cos.value, VarianceMethod::Quadrature, 2.0 * mean_cos.delta, profile.label())
}
