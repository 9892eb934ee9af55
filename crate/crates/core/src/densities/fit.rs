//! Least-squares expansion of an isotropic profile in the cos-power basis.

use nalgebra::{DMatrix, DVector};

use super::{cos_power_normalization, Component, DensityProfile};
use crate::error::{Error, Result};

pub const DEFAULT_FIT_ORDER: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct CosPowerFit {
    pub d: usize,
    /// Weights of `g_0 .. g_{order-1}`, summing to 1.
    pub weights: Vec<f64>,
    /// Root-mean-square residual on the fitting grid.
    pub residual: f64,
}

impl CosPowerFit {
    pub fn components(&self) -> Vec<Component> {
        (0..self.weights.len() as u32).map(Component::CosPower).collect()
    }

    pub fn value(&self, theta0: f64) -> f64 {
        let t = theta0.cos();
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * (1.0 + t.powi(k as i32)) / cos_power_normalization(k as u32, self.d))
            .sum()
    }

    /// The fitted mixture as a profile; fails if the truncation went negative.
    pub fn into_profile(self) -> Result<DensityProfile> {
        let components = self.components();
        DensityProfile::mixture(self.d, self.weights, components)
    }
}

/// Fits `Σ w_k g_k(θ0)` to `profile` on Chebyshev nodes in `cos θ0`.
pub fn fit_cos_power_mixture(profile: &DensityProfile, order: usize) -> Result<CosPowerFit> {
    if order == 0 {
        return Err(Error::invalid("fit order must be >= 1"));
    }
    if !profile.is_isotropic() {
        return Err(Error::invalid("only isotropic profiles have a cos-power expansion"));
    }
    let d = profile.d();
    let rows = 8 * order.max(8);
    let norms: Vec<f64> = (0..order as u32).map(|k| cos_power_normalization(k, d)).collect();
    let ts: Vec<f64> = (0..rows).map(|i| (std::f64::consts::PI * (i as f64 + 0.5) / rows as f64).cos()).collect();
    let a = DMatrix::from_fn(rows, order, |i, k| (1.0 + ts[i].powi(k as i32)) / norms[k]);
    let b = DVector::from_fn(rows, |i, _| profile.value(ts[i].acos()));
    let svd = a.clone().svd(true, true);
    let w = svd
        .solve(&b, 1e-13 * svd.singular_values.max())
        .map_err(|e| Error::invalid(format!("least squares failed: {e}")))?;
    let residual = ((&a * &w - &b).norm_squared() / rows as f64).sqrt();
    let total: f64 = w.iter().sum();
    if !(total.abs() > 1e-12) {
        return Err(Error::NonNormalizable { integral: total });
    }
    let weights = w.iter().map(|x| x / total).collect();
    Ok(CosPowerFit { d, weights, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::variance;
    use crate::quadrature::QuadratureConfig;

    #[test]
    fn recovers_a_finite_mixture() {
        let p =
            DensityProfile::mixture(3, vec![0.25, 0.75], vec![Component::CosPower(1), Component::CosPower(3)]).unwrap();
        let fit = fit_cos_power_mixture(&p, 6).unwrap();
        assert!(fit.residual < 1e-12);
        let v = variance(&fit.into_profile().unwrap(), &QuadratureConfig::default()).unwrap().value;
        assert!((v - (0.25 * 1.5 + 0.75 * 1.75)).abs() < 1e-9);
    }

    #[test]
    fn approximates_the_sigma_family() {
        let p = DensityProfile::sigma_family(0.3, 2).unwrap();
        let fit = fit_cos_power_mixture(&p, DEFAULT_FIT_ORDER).unwrap();
        for i in 0..50 {
            let t = std::f64::consts::PI * i as f64 / 49.0;
            assert!((fit.value(t) - p.value(t)).abs() < 1e-6 * p.value(0.0));
        }
        let v = variance(&fit.into_profile().unwrap(), &QuadratureConfig::default()).unwrap().value;
        assert!((v - 1.4).abs() < 1e-6, "v = {v}");
    }

    #[test]
    fn rejects_non_isotropic() {
        let h = DensityProfile::sin_power(1).unwrap();
        assert!(fit_cos_power_mixture(&h, 4).is_err());
        assert!(fit_cos_power_mixture(&DensityProfile::uniform(2).unwrap(), 0).is_err());
    }
}
