//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N: PASS|FAIL ...` line (visible with `--nocapture`) before
//! asserting.

use std::f64::consts::LN_2;
use std::time::Instant;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spherevar_core::calculus::{
    accumulate_equal, accumulate_general, accumulate_iterated, classify_range, figure2_data, threshold_sigma,
    variance_sum, CURVE_K_MAX, CURVE_SIGMAS,
};
use spherevar_core::convolve::{lemma_rhs_exact, sum_variance_general, verify_variance_lemma};
use spherevar_core::densities::{
    closed_form_variance_cospower, general_variance, s7_example_g1, variance, variance_by_quadrature, DensityProfile,
};
use spherevar_core::identities::{count_increasing_ordered_trees, identity_sweep};
use spherevar_core::quadrature::QuadratureConfig;
use spherevar_core::quantum::fidelity;
use spherevar_core::sampler::{sample_law, simulate_sum, Completion, ErrorLaw};

const SEED: u64 = 20_240_601;

fn report(n: u32, ok: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

/// `n!!` in floating point, for oracles below.
fn dfact(n: i64) -> f64 {
    (1..=n).rev().step_by(2).map(|k| k as f64).product()
}

/// Variance of `1 + cos^k` on `S^d` from the double-factorial formula.
fn cos_power_oracle(k: u32, d: usize) -> f64 {
    if k % 2 == 0 {
        2.0
    } else {
        2.0 - 2.0 * dfact(k as i64) * dfact(d as i64 - 1) / dfact((k as usize + d) as i64)
    }
}

#[test]
fn criterion_01_worked_example() {
    let start = Instant::now();
    let cfg = QuadratureConfig::nested();
    let g1 = s7_example_g1();
    let g2 = DensityProfile::cos_power(7, 1).unwrap();
    let v1 = general_variance(&g1, &cfg).unwrap().value;
    let v2 = variance_by_quadrature(&g2, &QuadratureConfig::default()).unwrap().value;
    let v12 = sum_variance_general(&g1, &g2, &cfg).unwrap().value;
    let secs = start.elapsed().as_secs_f64();
    let gaps = [(v1 - 53.0 / 28.0).abs(), (v2 - 7.0 / 4.0).abs(), (v12 - 445.0 / 224.0).abs()];
    let ok = gaps.iter().all(|&g| g < 1e-6) && secs < 60.0 && (cos_power_oracle(1, 7) - 1.75).abs() < 1e-15;
    report(1, ok, format!("V1={v1:.10} V2={v2:.10} V12={v12:.10} gaps={gaps:?} in {secs:.2}s"));
}

#[test]
fn criterion_02_isotropic_law_sweep() {
    let cfg = QuadratureConfig::nested();
    let (mut worst, mut worst_even) = (0.0f64, 0.0f64);
    let mut exact_mismatch = 0;
    for d in [1, 2, 3, 7] {
        for k in 0..=7u32 {
            for l in 0..=7u32 {
                let r = verify_variance_lemma(k, l, d, &cfg).unwrap();
                let (vk, vl) = (cos_power_oracle(k, d), cos_power_oracle(l, d));
                let law = (2.0 * (vk + vl) - vk * vl) / 2.0;
                worst = worst.max((r.lhs - law).abs());
                if k % 2 == 0 || l % 2 == 0 {
                    worst_even = worst_even.max((r.lhs - 2.0).abs());
                    if lemma_rhs_exact(k, l, d) != BigRational::from_integer(2.into()) {
                        exact_mismatch += 1;
                    }
                }
            }
        }
    }
    let ok = worst < 1e-8 && worst_even < 1e-10 && exact_mismatch == 0;
    report(2, ok, format!("256 pairs, max gap {worst:.2e}, even-branch max gap {worst_even:.2e}"));
}

#[test]
fn criterion_03_closed_form_agreement() {
    let cfg = QuadratureConfig::default();
    let mut worst = 0.0f64;
    let mut oracle_worst = 0.0f64;
    for d in [1, 2, 3, 4, 7] {
        for k in 0..=9 {
            let exact = closed_form_variance_cospower(k, d).to_f64().unwrap();
            let quad = variance_by_quadrature(&DensityProfile::cos_power(d, k).unwrap(), &cfg).unwrap().value;
            worst = worst.max((exact - quad).abs());
            oracle_worst = oracle_worst.max((exact - cos_power_oracle(k, d)).abs());
        }
    }
    let ok = worst < 1e-9 && oracle_worst < 1e-12;
    report(3, ok, format!("50 cases, max |closed - quadrature| = {worst:.2e}"));
}

#[test]
fn criterion_04_combinatorial_identity() {
    let sweep = identity_sweep(8, 9).unwrap();
    let failures = sweep.iter().filter(|i| !i.holds()).count();
    let parities = sweep.iter().any(|i| i.d % 2 == 0) && sweep.iter().any(|i| i.d % 2 == 1);
    let counts: Vec<u64> = (1..=6).map(|n| count_increasing_ordered_trees(n).unwrap()).collect();
    let want: Vec<u64> = (1..=6).map(|n| dfact(2 * n - 1) as u64).collect();
    let ok = failures == 0 && parities && sweep.len() == 729 && counts == want;
    report(4, ok, format!("{} instances, {failures} failures, tree counts {counts:?}", sweep.len()));
}

#[test]
fn criterion_05_monte_carlo_sums() {
    let start = Instant::now();
    let n = 1_000_000;
    let example = simulate_sum(
        &s7_example_g1().into(),
        &DensityProfile::cos_power(7, 1).unwrap().into(),
        n,
        SEED,
        0,
        &Completion::Canonical,
    )
    .unwrap();
    let target = 445.0 / 224.0;
    let mut ok = (example.stats.variance - target).abs() <= 3.0 * example.stats.std_error;
    let mut detail = format!("example {:.6} ± {:.6} vs {target:.6}", example.stats.variance, example.stats.std_error);
    let pairs: [(DensityProfile, DensityProfile); 4] = [
        (DensityProfile::cos_power(1, 1).unwrap(), DensityProfile::cos_power(1, 3).unwrap()),
        (DensityProfile::cos_power(2, 1).unwrap(), DensityProfile::uniform(2).unwrap()),
        (DensityProfile::cos_power(3, 1).unwrap(), DensityProfile::sigma_family(0.5, 2).unwrap()),
        (DensityProfile::cos_power(7, 3).unwrap(), DensityProfile::sigma_family(0.9, 4).unwrap()),
    ];
    let cfg = QuadratureConfig::default();
    for (i, (a, b)) in pairs.into_iter().enumerate() {
        let law = variance_sum(variance(&a, &cfg).unwrap().value, variance(&b, &cfg).unwrap().value).unwrap();
        let s = simulate_sum(&a.into(), &b.into(), n, SEED, 1 + i as u64, &Completion::Canonical).unwrap();
        let z = (s.stats.variance - law) / s.stats.std_error;
        ok &= z.abs() <= 3.0;
        detail.push_str(&format!("; pair {i} z={z:.2}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 300.0;
    report(5, ok, format!("{detail} in {secs:.1}s"));
}

#[test]
fn criterion_06_accumulation_and_threshold() {
    let equal = accumulate_equal(0.1, 100).unwrap();
    let closed = 2.0 - 2.0 * 0.95f64.powi(100);
    let mut ok = (equal - closed).abs() < 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let len = rng.random_range(1..=12);
        let sigmas: Vec<f64> = (0..len).map(|_| rng.random_range(1e-9..2.0)).collect();
        worst = worst.max((accumulate_general(&sigmas).unwrap() - accumulate_iterated(&sigmas).unwrap()).abs());
    }
    ok &= worst < 1e-10;
    let t = threshold_sigma(1.0, 100).unwrap();
    let scaled = t.per_step * 100.0;
    ok &= (1.33..=1.39).contains(&scaled) && (t.asymptotic - 2.0 * LN_2).abs() < 1e-15;
    report(
        6,
        ok,
        format!(
            "V(0.1,100)={equal:.12}, general-vs-iterated {worst:.1e}, 100·σ*={scaled:.5}, limit {:.5}",
            t.asymptotic
        ),
    );
}

#[test]
fn criterion_07_table_cells() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let cells =
        [((0.0, 2.0), (0.0, 2.0)), ((2.0, 4.0), (0.0, 2.0)), ((0.0, 2.0), (2.0, 4.0)), ((2.0, 4.0), (2.0, 4.0))];
    let mut outside = 0;
    let mut labels = Vec::new();
    for ((a0, a1), (b0, b1)) in cells {
        let mut label = "";
        let mut draws = 0;
        while draws < 10_000 {
            let (v1, v2): (f64, f64) = (rng.random_range(a0..a1), rng.random_range(b0..b1));
            if v1 == a0 || v2 == b0 {
                continue;
            }
            draws += 1;
            let cell = classify_range(v1, v2).unwrap();
            label = cell.label;
            if !cell.contains(&variance_sum(v1, v2).unwrap()) {
                outside += 1;
            }
        }
        labels.push(label);
    }
    report(7, outside == 0, format!("4 × 10^4 draws, {outside} outside; cells {labels:?}"));
}

#[test]
fn criterion_08_quantum_sandwich() {
    let n = 1_000_000;
    let mut laws: Vec<ErrorLaw> = Vec::new();
    for q in [2, 4] {
        for sigma in [0.1, 0.5, 0.9] {
            laws.push(DensityProfile::sigma_family(sigma, q).unwrap().into());
        }
        laws.push(DensityProfile::uniform(2 * q as usize - 1).unwrap().into());
    }
    let mut ok = true;
    let mut detail = String::new();
    for (i, law) in laws.iter().enumerate() {
        let f = fidelity(&sample_law(law, n, SEED, i as u64).unwrap()).unwrap();
        // bounds move with V_q; its error propagates at half (lower) or
        // 1/(4·upper) (upper) of its standard error
        let lo_se = f.std_error.hypot(f.quantum_variance_se / 2.0);
        let hi_se = f.std_error.hypot(f.quantum_variance_se / (4.0 * f.upper.max(1e-12)));
        ok &= f.lower <= f.fidelity + 3.0 * lo_se && f.fidelity <= f.upper + 3.0 * hi_se && f.holds;
        detail.push_str(&format!("[{}: {:.4}≤{:.4}≤{:.4}] ", law.label(), f.lower, f.fidelity, f.upper));
    }
    let uni = fidelity(&sample_law(&laws[3], n, SEED, 99).unwrap()).unwrap();
    let vq_ok = (uni.quantum_variance - 2.0 / 3.0).abs() <= 3.0 * uni.quantum_variance_se;
    let f_ok = (uni.fidelity - std::f64::consts::FRAC_1_SQRT_2).abs() <= 3.0 * uni.std_error;
    ok &= vq_ok && f_ok;
    detail.push_str(&format!("uniform S^3: V_q={:.5} F={:.5}", uni.quantum_variance, uni.fidelity));
    report(8, ok, detail);
}

#[test]
fn criterion_09_accumulation_curves() {
    let rows = figure2_data(&CURVE_SIGMAS, CURVE_K_MAX).unwrap();
    let mut ok = rows.len() == 500;
    for series in rows.chunks(CURVE_K_MAX) {
        ok &= series.windows(2).all(|w| w[1].variance > w[0].variance && w[1].sigma == w[0].sigma);
    }
    let end = rows.iter().find(|p| p.sigma == 0.1 && p.k == 100).unwrap().variance;
    ok &= (end - 1.988159).abs() < 5e-7;
    report(9, ok, format!("{} rows, sigma=0.1 endpoint {end:.7}", rows.len()));
}

#[test]
fn criterion_10_sigma_family_audit() {
    let cfg = QuadratureConfig::default();
    let mut worst_mass = 0.0f64;
    let mut worst_var = 0.0f64;
    for (q, d) in [(2u32, 3usize), (4, 7)] {
        for sigma in [0.1, 0.5, 0.9] {
            let p = DensityProfile::sigma_family(sigma, q).unwrap();
            assert_eq!(p.d(), d);
            worst_mass = worst_mass.max((p.integrate(&cfg, |_| 1.0).unwrap().value - 1.0).abs());
            worst_var = worst_var.max((variance(&p, &cfg).unwrap().value - 2.0 * (1.0 - sigma)).abs());
        }
    }
    report(
        10,
        worst_mass < 1e-8 && worst_var < 1e-8,
        format!("max mass gap {worst_mass:.1e}, max variance gap {worst_var:.1e}"),
    );
}
