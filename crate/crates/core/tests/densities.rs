//! Densities, their variances and the convolution of isotropic pairs, checked
//! against a plain Simpson rule written here.

use std::f64::consts::PI;

use num_traits::ToPrimitive;
use proptest::prelude::*;

use spherevar_core::calculus::variance_sum;
use spherevar_core::convolve::{sum_density_isotropic, sum_variance, verify_variance_lemma, ConvolveConfig};
use spherevar_core::densities::{
    closed_form_variance_cospower, variance, variance_by_quadrature, Component, DensityProfile,
};
use spherevar_core::identities::mean_cos_product;
use spherevar_core::quadrature::QuadratureConfig;

fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

/// `2 - 2 E[cos θ0]` for the unnormalized profile `f` on `S^d`.
fn oracle_variance(d: usize, f: impl Fn(f64) -> f64) -> f64 {
    let w = |t: f64| f(t) * t.sin().powi(d as i32 - 1);
    let mass = simpson(0.0, PI, 40_000, w);
    let first = simpson(0.0, PI, 40_000, |t| w(t) * t.cos());
    2.0 - 2.0 * first / mass
}

#[test]
fn cos_power_closed_form_against_oracle_and_quadrature() {
    let cfg = QuadratureConfig::default();
    for d in [1, 2, 3, 4, 7] {
        for k in 0..=9u32 {
            let exact = closed_form_variance_cospower(k, d).to_f64().unwrap();
            let oracle = oracle_variance(d, |t| 1.0 + t.cos().powi(k as i32));
            assert!((exact - oracle).abs() < 1e-9, "k={k} d={d}: {exact} vs oracle {oracle}");
            let p = DensityProfile::cos_power(d, k).unwrap();
            let quad = variance_by_quadrature(&p, &cfg).unwrap().value;
            assert!((exact - quad).abs() < 1e-9, "k={k} d={d}: {exact} vs quadrature {quad}");
        }
    }
}

#[test]
fn sigma_family_audit() {
    let cfg = QuadratureConfig::default();
    for (q, d) in [(2, 3), (4, 7)] {
        for sigma in [0.1, 0.5, 0.9] {
            let p = DensityProfile::sigma_family(sigma, q).unwrap();
            assert_eq!(p.d(), d);
            let mass = p.integrate(&cfg, |_| 1.0).unwrap().value;
            assert!((mass - 1.0).abs() < 1e-8, "q={q} sigma={sigma}: mass {mass}");
            let v = variance(&p, &cfg).unwrap().value;
            assert!((v - 2.0 * (1.0 - sigma)).abs() < 1e-8, "q={q} sigma={sigma}: V = {v}");
            let oracle = oracle_variance(d, |t| {
                (1.0 - sigma * sigma) / (1.0 + sigma * sigma - 2.0 * sigma * t.cos()).powi(q as i32)
            });
            assert!((v - oracle).abs() < 1e-8);
        }
    }
}

fn profiles() -> Vec<DensityProfile> {
    let mut out = Vec::new();
    for d in [1, 2, 3, 5, 7] {
        out.push(DensityProfile::uniform(d).unwrap());
        for k in [1, 2, 5] {
            out.push(DensityProfile::cos_power(d, k).unwrap());
        }
        out.push(
            DensityProfile::mixture(
                d,
                vec![0.5, 0.3, 0.2],
                vec![Component::CosPower(0), Component::CosPower(1), Component::CosPower(4)],
            )
            .unwrap(),
        );
        let grid: Vec<(f64, f64)> = (0..=32)
            .map(|i| {
                let t = PI * i as f64 / 32.0;
                (t, (-t).exp() + 0.1)
            })
            .collect();
        out.push(DensityProfile::tabulated(d, &grid).unwrap());
    }
    out.push(DensityProfile::sin_power(2).unwrap());
    out.push(DensityProfile::mixture(1, vec![0.5, 0.5], vec![Component::SinPower(2), Component::CosPower(1)]).unwrap());
    for q in [1, 2, 4, 8] {
        out.push(DensityProfile::sigma_family(0.6, q).unwrap());
    }
    out
}

#[test]
fn every_profile_is_normalized_and_has_a_valid_variance() {
    let cfg = QuadratureConfig::default();
    for p in profiles() {
        let mass = p.integrate(&cfg, |_| 1.0).unwrap().value;
        assert!((mass - 1.0).abs() <= 10.0 * cfg.tolerance, "{}: mass {mass}", p.label());
        let v = variance(&p, &cfg).unwrap().value;
        assert!((0.0..=4.0).contains(&v), "{}: V = {v}", p.label());
    }
}

#[test]
fn peaked_profiles_stay_below_two() {
    let cfg = QuadratureConfig::default();
    let mut decreasing = vec![DensityProfile::uniform(3).unwrap()];
    for d in [1, 2, 3, 7] {
        for k in [1, 3, 5, 7] {
            decreasing.push(DensityProfile::cos_power(d, k).unwrap());
        }
    }
    for sigma in [0.1, 0.5, 0.9] {
        decreasing.push(DensityProfile::sigma_family(sigma, 2).unwrap());
    }
    for p in decreasing {
        let v = variance(&p, &cfg).unwrap().value;
        assert!(v <= 2.0 + 1e-12, "{}: {v}", p.label());
    }
}

#[test]
fn law_sweep_over_cos_power_pairs() {
    let cfg = QuadratureConfig::nested();
    for d in [1, 2, 3, 7] {
        for k in 0..=7 {
            for l in 0..=7 {
                let r = verify_variance_lemma(k, l, d, &cfg).unwrap();
                assert!(r.gap < 1e-8, "k={k} l={l} d={d}: {} vs {}", r.lhs, r.rhs);
                if k % 2 == 1 && l % 2 == 1 {
                    // the same value from the exact double-factorial product
                    let exact = 2.0 - 2.0 * mean_cos_product(k, l, d).to_f64().unwrap();
                    assert!((r.lhs - exact).abs() < 1e-8);
                } else {
                    assert!((r.lhs - 2.0).abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn convolution_is_commutative() {
    let cfg = ConvolveConfig::default();
    let pairs = [
        (DensityProfile::cos_power(3, 1).unwrap(), DensityProfile::sigma_family(0.5, 2).unwrap()),
        (DensityProfile::cos_power(2, 3).unwrap(), DensityProfile::cos_power(2, 2).unwrap()),
        (DensityProfile::cos_power(7, 5).unwrap(), DensityProfile::uniform(7).unwrap()),
    ];
    for (a, b) in pairs {
        let ab = sum_density_isotropic(&a, &b, &cfg).unwrap().variance.value;
        let ba = sum_density_isotropic(&b, &a, &cfg).unwrap().variance.value;
        assert!((ab - ba).abs() < 1e-9, "{} + {}: {ab} vs {ba}", a.label(), b.label());
        let law =
            variance_sum(variance(&a, &cfg.quadrature).unwrap().value, variance(&b, &cfg.quadrature).unwrap().value)
                .unwrap();
        assert!((ab - law).abs() < 1e-8);
    }
}

#[test]
fn tabulated_sum_feeds_the_next_sum() {
    let cfg = ConvolveConfig::default();
    let g = DensityProfile::cos_power(3, 1).unwrap();
    let two = sum_density_isotropic(&g, &g, &cfg).unwrap();
    // the 512-point table carries the variance to interpolation accuracy
    let table_v = variance_by_quadrature(&two.profile, &QuadratureConfig::default()).unwrap().value;
    assert!((table_v - two.variance.value).abs() < 1e-6, "{table_v} vs {}", two.variance.value);
    let three = sum_variance(&two.profile, &g, &cfg.quadrature).unwrap().value;
    let law = variance_sum(variance_sum(1.5, 1.5).unwrap(), 1.5).unwrap();
    assert!((three - law).abs() < 1e-6, "{three} vs {law}");
}

#[test]
fn circle_sums_with_asymmetric_tables() {
    let grid: Vec<(f64, f64)> = (0..=64)
        .map(|i| {
            let t = -PI + 2.0 * PI * i as f64 / 64.0;
            (t, 1.0 + 0.8 * (t - 0.3).cos())
        })
        .collect();
    let a = DensityProfile::tabulated(1, &grid).unwrap();
    let b = DensityProfile::cos_power(1, 3).unwrap();
    let cfg = QuadratureConfig::nested();
    let got = sum_variance(&a, &b, &cfg).unwrap().value;
    let q = QuadratureConfig::default();
    let law = variance_sum(variance(&a, &q).unwrap().value, variance(&b, &q).unwrap().value).unwrap();
    assert!((got - law).abs() < 1e-8, "{got} vs {law}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cos_power_normalization(d in 1usize..9, k in 0u32..12) {
        let p = DensityProfile::cos_power(d, k).unwrap();
        let cfg = QuadratureConfig::default();
        let mass = p.integrate(&cfg, |_| 1.0).unwrap().value;
        prop_assert!((mass - 1.0).abs() <= 10.0 * cfg.tolerance);
    }

    #[test]
    fn mixture_variance_is_linear(d in 1usize..8, w in 0.0..1.0f64, k in 0u32..8, l in 0u32..8) {
        let p = DensityProfile::mixture(d, vec![w, 1.0 - w], vec![Component::CosPower(k), Component::CosPower(l)]).unwrap();
        let cfg = QuadratureConfig::default();
        let v = variance(&p, &cfg).unwrap().value;
        let vk = closed_form_variance_cospower(k, d).to_f64().unwrap();
        let vl = closed_form_variance_cospower(l, d).to_f64().unwrap();
        prop_assert!((v - (w * vk + (1.0 - w) * vl)).abs() < 1e-9);
    }
}
