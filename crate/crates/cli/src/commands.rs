use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::Value;

use spherevar_core::calculus::{
    accumulate_equal, accumulate_general, accumulate_iterated, classify_range, figure2_data, linear_variance,
    threshold_sigma, trajectory, variance_sum,
};
use spherevar_core::convolve::{
    lemma_rhs_exact, sum_density_circle, sum_density_isotropic, sum_variance_general, verify_variance_lemma,
    ConvolveConfig,
};
use spherevar_core::densities::{
    closed_form_variance_cospower, general_variance, s7_example_g1, variance, variance_by_quadrature, DensityKind,
    DensityProfile, DensitySpec, GeneralDensity,
};
use spherevar_core::identities::verify_identities;
use spherevar_core::quadrature::QuadratureConfig;
use spherevar_core::quantum::quantum_report;
use spherevar_core::sampler::{empirical_variance, sample_law, simulate_sum, Completion, ErrorLaw};
use spherevar_core::Error;

use crate::report::{exact, num, rounded, Report};
use crate::{Cli, Command, CompletionArg, Failure};

/// Gap above which a quadrature result counts as disagreeing with its
/// exact or law-predicted value.
const AGREEMENT: f64 = 1e-6;

/// |z| above which a Monte Carlo estimate counts as contradicting the law.
const Z_LIMIT: f64 = 4.0;

pub fn run(cli: &Cli) -> Result<Report, Failure> {
    match &cli.command {
        Command::Variance(a) => variance_cmd(cli, &a.spec),
        Command::Convolve(a) => convolve_cmd(cli, &a.first, &a.second, a.grid),
        Command::SumGeneral(a) => sum_general_cmd(cli, a.first.as_deref(), a.second.as_deref()),
        Command::Accumulate(a) => accumulate_cmd(a.sigma, a.k, a.sigmas.as_deref(), a.trajectory),
        Command::Threshold(a) => {
            let t = threshold_sigma(a.sigma_max, a.k)?;
            Ok(object_report(&t))
        }
        Command::Classify(a) => classify_cmd(a.v1, a.v2),
        Command::Sample(a) => sample_cmd(cli, &a.spec, a.n),
        Command::SimulateSum(a) => simulate_cmd(cli, a.first.as_deref(), a.second.as_deref(), a.n, a.completion),
        Command::VerifyIdentities(a) => identities_cmd(a.max_ab, a.max_d, a.max_tree),
        Command::VerifyLemma(a) => lemma_cmd(cli, a.max_k, &a.dims, a.max_gap),
        Command::Quantum(a) => quantum_cmd(cli, &a.spec, a.n),
        Command::Figure2(a) => figure2_cmd(&a.sigmas, a.k_max),
        Command::ReproduceExample => reproduce_cmd(cli),
    }
}

/// Inline JSON if it looks like an object, else a file path.
fn load_spec(arg: &str) -> Result<DensityProfile, Failure> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Failure::Io(format!("cannot read density spec '{arg}': {e}")))?
    };
    Ok(DensitySpec::from_json(&text)?.build()?)
}

fn object_report<T: serde::Serialize>(x: &T) -> Report {
    let mut r = Report::default();
    if let Value::Object(m) = rounded(x) {
        for (k, v) in m {
            r = r.field(&k, v);
        }
    }
    r
}

fn exact_variance(p: &DensityProfile) -> Option<BigRational> {
    match p.kind() {
        DensityKind::Uniform => Some(BigRational::from_integer(2.into())),
        DensityKind::CosPower { k } => Some(closed_form_variance_cospower(*k, p.d())),
        _ => None,
    }
}

fn variance_cmd(cli: &Cli, spec: &str) -> Result<Report, Failure> {
    let p = load_spec(spec)?;
    let cfg = cli.quadrature(QuadratureConfig::default());
    let best = variance(&p, &cfg)?;
    let quad = variance_by_quadrature(&p, &cfg)?;
    let mut r = Report::default()
        .field("density", p.label())
        .field("d", p.d())
        .field("variance", num(best.value))
        .field("method", rounded(&best.method));
    if let Some(x) = exact_variance(&p) {
        r = r.field("exact", exact(&x)).flag((quad.value - best.value).abs() > AGREEMENT);
    }
    Ok(r.field("quadrature", num(quad.value)).field("quadrature_error", num(quad.error_estimate)))
}

fn convolve_cmd(cli: &Cli, first: &str, second: &str, grid: usize) -> Result<Report, Failure> {
    let (f1, f2) = (load_spec(first)?, load_spec(second)?);
    let cfg = ConvolveConfig { quadrature: cli.quadrature(QuadratureConfig::nested()), grid };
    let q1 = cli.quadrature(QuadratureConfig::default());
    let (v1, v2) = (variance(&f1, &q1)?.value, variance(&f2, &q1)?.value);
    let res = if f1.d() == 1 { sum_density_circle(&f1, &f2, &cfg)? } else { sum_density_isotropic(&f1, &f2, &cfg)? };
    let formula = variance_sum(v1, v2)?;
    let gap = (res.variance.value - formula).abs();
    let rows = match res.profile.kind() {
        DensityKind::Tabulated(t) => t.xs().iter().zip(t.ys()).map(|(&x, &y)| vec![num(x), num(y)]).collect(),
        _ => Vec::new(),
    };
    Ok(Report::default()
        .field("first", f1.label())
        .field("second", f2.label())
        .field("v1", num(v1))
        .field("v2", num(v2))
        .field("formula", num(formula))
        .field("variance", num(res.variance.value))
        .field("gap", num(gap))
        .field("quadrature_delta", num(res.delta))
        .field("nodes", res.nodes)
        .field("mass_error", num(res.mass_error))
        .with_table(&["theta0", "density"], rows)
        .flag(gap > AGREEMENT))
}

fn sum_general_cmd(cli: &Cli, first: Option<&str>, second: Option<&str>) -> Result<Report, Failure> {
    let g1 = match first {
        None => s7_example_g1(),
        Some(s) => GeneralDensity::from_isotropic(&load_spec(s)?)?,
    };
    let f2 = match second {
        None => DensityProfile::cos_power(7, 1)?,
        Some(s) => load_spec(s)?,
    };
    let nested = cli.quadrature(QuadratureConfig::nested());
    let v1 = general_variance(&g1, &nested)?;
    let v2 = variance(&f2, &cli.quadrature(QuadratureConfig::default()))?;
    let formula = variance_sum(v1.value, v2.value)?;
    let v12 = sum_variance_general(&g1, &f2, &nested)?;
    let gap = (v12.value - formula).abs();
    Ok(Report::default()
        .field("first", g1.label())
        .field("second", f2.label())
        .field("v1", num(v1.value))
        .field("v2", num(v2.value))
        .field("formula", num(formula))
        .field("variance", num(v12.value))
        .field("gap", num(gap))
        .field("quadrature_error", num(v12.error_estimate))
        .flag(gap > AGREEMENT))
}

fn accumulate_cmd(sigma: Option<f64>, k: Option<usize>, sigmas: Option<&[f64]>, traj: bool) -> Result<Report, Failure> {
    let steps: Vec<f64> = match (sigma, sigmas) {
        (Some(s), _) => {
            let k = k.ok_or_else(|| Error::InvalidArgument("--sigma needs --k".into()))?;
            vec![s; k]
        }
        (None, Some(list)) => list.to_vec(),
        (None, None) => return Err(Error::InvalidArgument("give --sigma with --k, or --sigmas".into()).into()),
    };
    let v = match sigma {
        Some(s) => accumulate_equal(s, steps.len())?,
        None => accumulate_general(&steps)?,
    };
    let iterated = accumulate_iterated(&steps)?;
    let mut r = Report::default()
        .field("steps", steps.len())
        .field("variance", num(v))
        .field("iterated", num(iterated))
        .field("linear_variance", num(linear_variance(v)?));
    if traj {
        let t = trajectory(&steps)?;
        let rows = (0..steps.len())
            .map(|i| vec![Value::from(i + 1), num(t.steps[i]), num(t.cumulative[i]), num(t.linearized[i])])
            .collect();
        r = r.with_table(&["k", "sigma", "variance", "linear_variance"], rows);
    }
    Ok(r)
}

fn classify_cmd(v1: f64, v2: f64) -> Result<Report, Failure> {
    let cell = classify_range(v1, v2)?;
    let v = variance_sum(v1, v2)?;
    let inside = cell.contains(&v);
    Ok(Report::default()
        .field("v1", num(v1))
        .field("v2", num(v2))
        .field("cell", cell.label)
        .field("lower", num(cell.lower))
        .field("upper", num(cell.upper))
        .field("variance", num(v))
        .field("inside", inside)
        .flag(!inside))
}

fn sample_cmd(cli: &Cli, spec: &str, n: usize) -> Result<Report, Failure> {
    let law = ErrorLaw::from(load_spec(spec)?);
    let batch = sample_law(&law, n, cli.seed, 0)?;
    let stats = empirical_variance(&batch)?;
    let points: Vec<Value> = batch.rows().map(|row| Value::Array(row.iter().map(|&x| num(x)).collect())).collect();
    Ok(Report::default()
        .field("law", law.label())
        .field("d", batch.d)
        .field("n", batch.len())
        .field("seed", cli.seed)
        .field("variance", num(stats.variance))
        .field("std_error", num(stats.std_error))
        .field("points", Value::Array(points))
        .with_csv(batch.to_csv()))
}

fn example_pair() -> Result<(ErrorLaw, ErrorLaw), Failure> {
    Ok((s7_example_g1().into(), DensityProfile::cos_power(7, 1)?.into()))
}

fn simulate_cmd(
    cli: &Cli,
    first: Option<&str>,
    second: Option<&str>,
    n: usize,
    completion: CompletionArg,
) -> Result<Report, Failure> {
    let (f1, f2) = match (first, second) {
        (Some(a), Some(b)) => (load_spec(a)?.into(), load_spec(b)?.into()),
        _ => example_pair()?,
    };
    let completion = match completion {
        CompletionArg::Canonical => Completion::Canonical,
        CompletionArg::Random => Completion::Random { seed: cli.seed },
    };
    let s = simulate_sum(&f1, &f2, n, cli.seed, 0, &completion)?;
    Ok(Report::default()
        .field("first", f1.label())
        .field("second", f2.label())
        .field("n", n)
        .field("seed", cli.seed)
        .field("estimate", num(s.stats.variance))
        .field("std_error", num(s.stats.std_error))
        .field("formula", num(s.formula))
        .field("z", num(s.z))
        .field("convention_dependent", f2.d() >= 2 && !f2.is_isotropic())
        .flag(s.z.abs() > Z_LIMIT))
}

fn identities_cmd(max_ab: u32, max_d: usize, max_tree: usize) -> Result<Report, Failure> {
    let rep = verify_identities(max_ab, max_d, max_tree)?;
    let ok = rep.all_hold();
    let rows = rep
        .instances
        .iter()
        .map(|i| vec![i.a.into(), i.b.into(), i.d.into(), exact(&i.lhs), exact(&i.rhs), i.holds().into()])
        .collect();
    Ok(object_report(&rep).field("all_hold", ok).with_table(&["a", "b", "d", "lhs", "rhs", "holds"], rows).flag(!ok))
}

fn lemma_cmd(cli: &Cli, max_k: u32, dims: &[usize], max_gap: f64) -> Result<Report, Failure> {
    let cfg = cli.quadrature(QuadratureConfig::nested());
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &d in dims {
        for k in 0..=max_k {
            for l in 0..=max_k {
                let rep = verify_variance_lemma(k, l, d, &cfg)?;
                worst = worst.max(rep.gap);
                rows.push(vec![
                    k.into(),
                    l.into(),
                    d.into(),
                    num(rep.lhs),
                    exact(&lemma_rhs_exact(k, l, d)),
                    num(rep.rhs),
                    num(rep.gap),
                ]);
            }
        }
    }
    Ok(Report::default()
        .field("pairs", rows.len())
        .field("max_gap", num(worst))
        .field("tolerance", num(max_gap))
        .with_table(&["k", "l", "d", "lhs", "rhs_exact", "rhs", "gap"], rows)
        .flag(worst > max_gap))
}

fn quantum_cmd(cli: &Cli, spec: &str, n: usize) -> Result<Report, Failure> {
    let law = ErrorLaw::from(load_spec(spec)?);
    let q = quantum_report(&law, n, cli.seed)?;
    let eig: Vec<Value> = q.density_matrix.eigenvalues().into_iter().map(num).collect();
    let mut r =
        Report::default().field("law", law.label()).field("qubits", q.qubits).field("n", n).field("seed", cli.seed);
    if let Value::Object(m) = rounded(&q.fidelity) {
        for (k, v) in m {
            r = r.field(&k, v);
        }
    }
    Ok(r.field("density_matrix", rounded(&q.density_matrix.to_json()))
        .field("eigenvalues", Value::Array(eig))
        .flag(!q.fidelity.holds))
}

fn figure2_cmd(sigmas: &[f64], k_max: usize) -> Result<Report, Failure> {
    let rows = figure2_data(sigmas, k_max)?
        .into_iter()
        .map(|p| vec![Value::from(p.k), num(p.sigma), num(p.variance)])
        .collect();
    Ok(Report::default().with_table(&["k", "sigma", "variance"], rows))
}

fn reproduce_cmd(cli: &Cli) -> Result<Report, Failure> {
    let nested = cli.quadrature(QuadratureConfig::nested());
    let g1 = s7_example_g1();
    let g2 = DensityProfile::cos_power(7, 1)?;
    let v1_exact = BigRational::new(53.into(), 28.into());
    let v2_exact = closed_form_variance_cospower(1, 7);
    let v12_exact = variance_sum(v1_exact.clone(), v2_exact.clone())?;
    let v1 = general_variance(&g1, &nested)?.value;
    let v2 = variance_by_quadrature(&g2, &cli.quadrature(QuadratureConfig::default()))?.value;
    let v12 = sum_variance_general(&g1, &g2, &nested)?.value;
    let mut r = Report::default();
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, x, q) in [("V(g1)", &v1_exact, v1), ("V(g2)", &v2_exact, v2), ("V(g1+g2)", &v12_exact, v12)] {
        let xv = ratio_f64(x);
        let gap = (q - xv).abs();
        worst = worst.max(gap);
        r = r.field(name, exact(x));
        rows.push(vec![name.into(), exact(x), num(xv), num(q), num(gap)]);
    }
    Ok(r.field("max_gap", num(worst))
        .with_table(&["quantity", "exact", "value", "quadrature", "gap"], rows)
        .flag(worst > AGREEMENT))
}

fn ratio_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
