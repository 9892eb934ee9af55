//! Monte Carlo realization of errors on `S^d` and of their sums.
//!
//! Random numbers come from ChaCha8 keyed by `(seed, stream)`. Work is split
//! into fixed-size chunks, each with its own position in the key stream, so
//! results do not depend on the number of worker threads.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::variance_sum;
use crate::densities::{general_variance, variance, DensityProfile, GeneralDensity};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, QuadratureConfig};
use crate::sphere::SpherePoint;

const CHUNK: usize = 1 << 16;
const CDF_CELLS: usize = 4096;
const ENVELOPE_INFLATION: f64 = 1.1;
const ENVELOPE_GRID: usize = 1 << 16;
const MIN_ACCEPTANCE: f64 = 1e-4;
const ACCEPTANCE_WARMUP: u64 = 10_000;

/// Generator for one chunk of one stream.
pub fn chunk_rng(seed: u64, stream: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    // 2^36 words per chunk, far more than a chunk consumes
    rng.set_word_pos((chunk as u128) << 36);
    rng
}

/// An error law that can be sampled: a density, or a point mass at the pole
/// (no error) or at its antipode.
#[derive(Debug, Clone)]
pub enum ErrorLaw {
    Profile(DensityProfile),
    General(GeneralDensity),
    Dirac { d: usize, antipodal: bool },
}

impl ErrorLaw {
    pub fn d(&self) -> usize {
        match self {
            ErrorLaw::Profile(p) => p.d(),
            ErrorLaw::General(g) => g.d(),
            ErrorLaw::Dirac { d, .. } => *d,
        }
    }

    /// Whether the law is invariant under rotations fixing the pole.
    pub fn is_isotropic(&self) -> bool {
        match self {
            ErrorLaw::Profile(p) => p.is_isotropic(),
            ErrorLaw::General(_) => false,
            ErrorLaw::Dirac { .. } => true,
        }
    }

    /// Exact or quadrature variance of the law.
    pub fn variance(&self) -> Result<f64> {
        let cfg = QuadratureConfig::default();
        match self {
            ErrorLaw::Profile(p) => Ok(variance(p, &cfg)?.value),
            ErrorLaw::General(g) => Ok(general_variance(g, &QuadratureConfig::nested())?.value),
            ErrorLaw::Dirac { antipodal, .. } => Ok(if *antipodal { 4.0 } else { 0.0 }),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ErrorLaw::Profile(p) => p.label(),
            ErrorLaw::General(g) => g.label(),
            ErrorLaw::Dirac { d, antipodal: false } => format!("no error on S^{d}"),
            ErrorLaw::Dirac { d, antipodal: true } => format!("antipodal error on S^{d}"),
        }
    }
}

impl From<DensityProfile> for ErrorLaw {
    fn from(p: DensityProfile) -> Self {
        ErrorLaw::Profile(p)
    }
}

impl From<GeneralDensity> for ErrorLaw {
    fn from(g: GeneralDensity) -> Self {
        ErrorLaw::General(g)
    }
}

/// Points stored row by row as `n × (d + 1)` Cartesian coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub d: usize,
    pub coords: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.coords.len() / (self.d + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * (self.d + 1)..(i + 1) * (self.d + 1)]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.d + 1)
    }

    pub fn point(&self, i: usize) -> Result<SpherePoint<f64>> {
        SpherePoint::from_cartesian(self.row(i).to_vec())
    }

    /// Builds a batch from explicit points (for tests and imports).
    pub fn from_points(points: &[SpherePoint<f64>]) -> Result<Self> {
        let d = points.first().ok_or_else(|| Error::invalid("empty batch"))?.dim();
        let mut coords = Vec::with_capacity(points.len() * (d + 1));
        for p in points {
            if p.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
            }
            coords.extend_from_slice(p.coords());
        }
        Ok(SampleBatch { d, coords, seed: 0, stream: 0 })
    }

    /// CSV with header `x0,...,xd`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..=self.d).map(|j| format!("x{j}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in self.rows() {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v:?}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalStats {
    /// `2 - 2 mean(x0)`.
    pub variance: f64,
    /// `2 sd(x0) / √n`.
    pub std_error: f64,
    pub n: usize,
}

/// Running moments of `x0`, merged in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0.0 {
            return other;
        }
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * other.n / n,
            m2: self.m2 + other.m2 + delta * delta * self.n * other.n / n,
        }
    }

    fn stats(self) -> Result<EmpiricalStats> {
        if self.n == 0.0 {
            return Err(Error::invalid("empty batch"));
        }
        let sd = if self.n > 1.0 { (self.m2 / (self.n - 1.0)).max(0.0).sqrt() } else { 0.0 };
        Ok(EmpiricalStats {
            variance: (2.0 - 2.0 * self.mean).clamp(0.0, 4.0),
            std_error: 2.0 * sd / self.n.sqrt(),
            n: self.n as usize,
        })
    }
}

fn merge_all(parts: Vec<Moments>) -> Moments {
    parts.into_iter().fold(Moments::default(), Moments::merge)
}

pub fn empirical_variance(batch: &SampleBatch) -> Result<EmpiricalStats> {
    let mut m = Moments::default();
    for row in batch.rows() {
        m.push(row[0]);
    }
    m.stats()
}

/// Precomputed sampler for one law.
#[derive(Debug, Clone)]
pub struct LawSampler {
    d: usize,
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    /// Inverse CDF of the `θ0` marginal on equal cells of `[lo, hi]`.
    InverseCdf {
        lo: f64,
        width: f64,
        cdf: Vec<f64>,
    },
    Rejection {
        density: GeneralDensity,
        envelope: f64,
    },
    Dirac {
        antipodal: bool,
    },
}

impl LawSampler {
    pub fn new(law: &ErrorLaw) -> Result<Self> {
        let d = law.d();
        let kind = match law {
            ErrorLaw::Profile(p) => inverse_cdf(p)?,
            ErrorLaw::General(g) => {
                let envelope = g.sup_on_grid(ENVELOPE_GRID) * ENVELOPE_INFLATION;
                if !(envelope > 0.0) || !envelope.is_finite() {
                    return Err(Error::Sampling("density has no positive supremum".into()));
                }
                SamplerKind::Rejection { density: g.clone(), envelope }
            }
            ErrorLaw::Dirac { antipodal, .. } => SamplerKind::Dirac { antipodal: *antipodal },
        };
        Ok(LawSampler { d, kind })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Writes one draw (centered at the pole) into `out` (length `d + 1`).
    /// `tally` counts rejection proposals and acceptances.
    fn draw(&self, rng: &mut ChaCha8Rng, out: &mut [f64], tally: &mut (u64, u64)) -> Result<()> {
        match &self.kind {
            SamplerKind::Dirac { antipodal } => {
                out.fill(0.0);
                out[0] = if *antipodal { -1.0 } else { 1.0 };
                Ok(())
            }
            SamplerKind::InverseCdf { lo, width, cdf } => {
                let u: f64 = rng.random();
                let cell = cdf.partition_point(|&c| c <= u).clamp(1, cdf.len() - 1);
                let (c0, c1) = (cdf[cell - 1], cdf[cell]);
                let frac = if c1 > c0 { ((u - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { rng.random() };
                let theta = lo + width * ((cell - 1) as f64 + frac);
                if self.d == 1 {
                    out[0] = theta.cos();
                    out[1] = theta.sin();
                } else {
                    out[0] = theta.cos();
                    let s = theta.sin();
                    uniform_direction(rng, &mut out[1..]);
                    out[1..].iter_mut().for_each(|x| *x *= s);
                }
                Ok(())
            }
            SamplerKind::Rejection { density, envelope } => {
                let m = density.depth();
                let mut angles = vec![0.0; m];
                loop {
                    uniform_direction(rng, out);
                    tally.0 += 1;
                    leading_angles(out, &mut angles);
                    let f = density.value(&angles) * crate::sphere::sphere_surface::<f64>(self.d);
                    let bound = envelope * crate::sphere::sphere_surface::<f64>(self.d);
                    if f > bound {
                        return Err(Error::Sampling(format!(
                            "density {f} exceeds the rejection envelope {bound} at angles {angles:?}"
                        )));
                    }
                    if rng.random::<f64>() * bound < f {
                        tally.1 += 1;
                        return Ok(());
                    }
                    if tally.0 >= ACCEPTANCE_WARMUP && (tally.1 as f64) < MIN_ACCEPTANCE * tally.0 as f64 {
                        return Err(Error::Sampling(format!(
                            "rejection acceptance {} / {} is below {MIN_ACCEPTANCE}",
                            tally.1, tally.0
                        )));
                    }
                }
            }
        }
    }
}

/// First `angles.len()` polar angles of a unit vector.
fn leading_angles(x: &[f64], angles: &mut [f64]) {
    let mut tail = x.iter().map(|v| v * v).sum::<f64>();
    for (j, a) in angles.iter_mut().enumerate() {
        tail -= x[j] * x[j];
        *a = tail.max(0.0).sqrt().atan2(x[j]);
    }
}

fn uniform_direction(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    loop {
        let mut norm = 0.0;
        for x in out.iter_mut() {
            *x = rng.sample(StandardNormal);
            norm += *x * *x;
        }
        if norm > 1e-300 {
            let inv = 1.0 / norm.sqrt();
            out.iter_mut().for_each(|x| *x *= inv);
            return;
        }
    }
}

/// Cumulative mass of the `θ0` marginal `f(θ0) sin^{d-1}θ0` on equal cells.
fn inverse_cdf(p: &DensityProfile) -> Result<SamplerKind> {
    let d = p.d();
    let (lo, hi) = p.angle_range();
    let width = (hi - lo) / CDF_CELLS as f64;
    let rule = gauss_legendre(8);
    let mut cdf = Vec::with_capacity(CDF_CELLS + 1);
    cdf.push(0.0);
    let mut total = 0.0;
    for i in 0..CDF_CELLS {
        let a = lo + width * i as f64;
        let mass = rule.integrate(a, a + width, |t| p.value(t) * t.sin().abs().powi(d as i32 - 1));
        if !(mass >= -1e-15) || !mass.is_finite() {
            return Err(Error::Sampling(format!("marginal mass {mass} on cell {i}")));
        }
        total += mass.max(0.0);
        cdf.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::Sampling("marginal has zero mass".into()));
    }
    cdf.iter_mut().for_each(|c| *c /= total);
    Ok(SamplerKind::InverseCdf { lo, width, cdf })
}

/// `n` independent draws from `law`, centered at the pole.
pub fn sample_law(law: &ErrorLaw, n: usize, seed: u64, stream: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    let sampler = LawSampler::new(law)?;
    let d = sampler.d();
    let chunks: Vec<usize> = (0..n.div_ceil(CHUNK)).collect();
    let parts: Vec<Vec<f64>> = chunks
        .par_iter()
        .map(|&c| {
            let count = CHUNK.min(n - c * CHUNK);
            let mut rng = chunk_rng(seed, stream, c as u64);
            let mut coords = vec![0.0; count * (d + 1)];
            let mut tally = (0, 0);
            for row in coords.chunks_exact_mut(d + 1) {
                sampler.draw(&mut rng, row, &mut tally)?;
            }
            Ok(coords)
        })
        .collect::<Result<_>>()?;
    Ok(SampleBatch { d, coords: parts.concat(), seed, stream })
}

/// Draws from an isotropic profile: `θ0` by inverse CDF, direction uniform.
pub fn sample_isotropic(profile: &DensityProfile, n: usize, seed: u64, stream: u64) -> Result<SampleBatch> {
    sample_law(&ErrorLaw::Profile(profile.clone()), n, seed, stream)
}

/// Applies the rotation that carries the pole to `current` to an error drawn
/// at the pole.
///
/// The rotation acts in the plane spanned by the pole and `current` and is
/// the identity on its orthogonal complement. For `current = -P` that plane
/// is undetermined; the limit along `x1` is used, which negates `x0` and `x1`.
pub fn compose_error(current: &SpherePoint<f64>, error_at_pole: &SpherePoint<f64>) -> Result<SpherePoint<f64>> {
    if current.dim() != error_at_pole.dim() {
        return Err(Error::DimensionMismatch { expected: current.dim(), found: error_at_pole.dim() });
    }
    let mut out = vec![0.0; current.dim() + 1];
    rotate_from_pole(current.coords(), error_at_pole.coords(), &mut out);
    SpherePoint::normalize(out)
}

fn rotate_from_pole(c: &[f64], v: &[f64], out: &mut [f64]) {
    let s = c[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
    if s <= 1e-300 {
        out.copy_from_slice(v);
        if c[0] < 0.0 {
            out[0] = -out[0];
            out[1] = -out[1];
        }
        return;
    }
    let c0 = c[0];
    let a = v[0];
    // b = <v, u> with u = c_perp / s
    let b = c[1..].iter().zip(&v[1..]).map(|(ci, vi)| ci * vi).sum::<f64>() / s;
    let along_u = a * s + b * c0;
    out[0] = a * c0 - b * s;
    for j in 1..c.len() {
        let u = c[j] / s;
        out[j] = v[j] - b * u + along_u * u;
    }
}

/// How the error of the second summand is oriented at the first.
#[derive(Debug, Clone, PartialEq)]
pub enum Completion {
    /// The plane rotation of [`compose_error`].
    Canonical,
    /// A fixed Haar-random orthogonal map fixing the pole, applied before
    /// the canonical rotation.
    Random { seed: u64 },
}

/// Haar-random `d × d` orthogonal matrix acting on `x1..xd`.
pub fn random_pole_completion(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = chunk_rng(seed, u64::MAX, 0);
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumStats {
    pub stats: EmpiricalStats,
    /// `V1 + V2 - V1 V2 / 2` from the single variances.
    pub formula: f64,
    /// `(estimate - formula) / SE`.
    pub z: f64,
}

/// Monte Carlo variance of `X1 + X2`: `x' ~ f1`, then an `f2` error at `x'`.
pub fn simulate_sum(
    f1: &ErrorLaw,
    f2: &ErrorLaw,
    n: usize,
    seed: u64,
    stream: u64,
    completion: &Completion,
) -> Result<SumStats> {
    if f1.d() != f2.d() {
        return Err(Error::DimensionMismatch { expected: f1.d(), found: f2.d() });
    }
    if n == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    let d = f1.d();
    let (s1, s2) = (LawSampler::new(f1)?, LawSampler::new(f2)?);
    let q = match completion {
        Completion::Canonical => None,
        Completion::Random { seed } => Some(random_pole_completion(d, *seed)),
    };
    let chunks: Vec<usize> = (0..n.div_ceil(CHUNK)).collect();
    let parts: Vec<Moments> = chunks
        .par_iter()
        .map(|&c| {
            let count = CHUNK.min(n - c * CHUNK);
            let mut rng = chunk_rng(seed, stream, c as u64);
            let (mut x, mut e, mut e2, mut out) =
                (vec![0.0; d + 1], vec![0.0; d + 1], vec![0.0; d + 1], vec![0.0; d + 1]);
            let (mut t1, mut t2) = ((0, 0), (0, 0));
            let mut m = Moments::default();
            for _ in 0..count {
                s1.draw(&mut rng, &mut x, &mut t1)?;
                s2.draw(&mut rng, &mut e, &mut t2)?;
                let err = match &q {
                    None => &e,
                    Some(q) => {
                        e2[0] = e[0];
                        for i in 0..d {
                            e2[i + 1] = (0..d).map(|j| q[(i, j)] * e[j + 1]).sum();
                        }
                        &e2
                    }
                };
                rotate_from_pole(&x, err, &mut out);
                m.push(out[0]);
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let stats = merge_all(parts).stats()?;
    let formula = variance_sum(f1.variance()?, f2.variance()?)?;
    let z = z_score(stats.variance, formula, stats.std_error);
    Ok(SumStats { stats, formula, z })
}

fn z_score(estimate: f64, target: f64, se: f64) -> f64 {
    let gap = estimate - target;
    if se > 0.0 {
        gap / se
    } else if gap.abs() <= 1e-12 {
        0.0
    } else {
        gap.signum() * f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureRow {
    pub label: String,
    pub formula: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    /// Estimate with a random completion of the orientation at `x'`.
    pub random_completion_estimate: f64,
    pub random_completion_z: f64,
    /// `|z| > 4` for the canonical estimate.
    pub violation: bool,
    /// The second summand is not isotropic on `d >= 2`, so the estimate
    /// depends on how its error is oriented at the first.
    pub convention_dependent: bool,
}

/// Evidence table for the variance-sum law over a list of pairs.
pub fn conjecture_report(pairs: &[(String, ErrorLaw, ErrorLaw)], n: usize, seed: u64) -> Result<Vec<ConjectureRow>> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, (label, f1, f2))| {
            let stream = 2 * i as u64;
            let canonical = simulate_sum(f1, f2, n, seed, stream, &Completion::Canonical)?;
            let random =
                simulate_sum(f1, f2, n, seed, stream + 1, &Completion::Random { seed: seed ^ (i as u64 + 1) })?;
            Ok(ConjectureRow {
                label: label.clone(),
                formula: canonical.formula,
                estimate: canonical.stats.variance,
                std_error: canonical.stats.std_error,
                z: canonical.z,
                random_completion_estimate: random.stats.variance,
                random_completion_z: random.z,
                violation: canonical.z.abs() > 4.0,
                convention_dependent: f2.d() >= 2 && !f2.is_isotropic(),
            })
        })
        .collect()
}

/// Histogram of `θ0` over `bins` equal cells of the law's angle range, with
/// the expected counts from the marginal.
pub fn theta0_histogram(profile: &DensityProfile, batch: &SampleBatch, bins: usize) -> Result<(Vec<u64>, Vec<f64>)> {
    if batch.d != profile.d() {
        return Err(Error::DimensionMismatch { expected: profile.d(), found: batch.d });
    }
    let (lo, hi) = profile.angle_range();
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for row in batch.rows() {
        let theta = if batch.d == 1 { row[1].atan2(row[0]) } else { row[0].clamp(-1.0, 1.0).acos() };
        let b = (((theta - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let cfg = QuadratureConfig::default();
    let d = profile.d();
    let scale = if d == 1 { 1.0 } else { crate::sphere::sphere_surface::<f64>(d - 1) };
    let mut expected = Vec::with_capacity(bins);
    for b in 0..bins {
        let a = lo + width * b as f64;
        let mass = cfg.integrate(a, a + width, |t| scale * profile.value(t) * t.sin().abs().powi(d as i32 - 1))?;
        expected.push(mass.value * batch.len() as f64);
    }
    Ok((counts, expected))
}
