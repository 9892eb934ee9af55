//! Composite Gauss-Legendre quadrature with node-doubling refinement.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// An `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Nodes are the roots of `P_n`, found by Newton iteration from the
    /// Tricomi initial guesses; weights are `2 / ((1 - x²) P_n'(x)²)`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = T::of(n as f64);
        let half = (n + 1) / 2;
        for i in 0..half {
            let guess = (T::PI() * (T::of(i as f64) + T::of(0.75)) / (nf + T::of(0.5))).cos();
            let mut x = guess;
            let mut deriv = T::one();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                deriv = dp;
                let dx = p / dp;
                x = x - dx;
                if dx.abs() <= T::epsilon() * T::of(4.0) {
                    let (_, dp) = legendre_with_derivative(n, x);
                    deriv = dp;
                    break;
                }
            }
            let w = T::two() / ((T::one() - x * x) * deriv * deriv);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = T::zero();
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `∫_a^b f`.
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = (b - a) / T::two();
        let mid = (a + b) / T::two();
        let terms: Vec<T> = self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(mid + half * x)).collect();
        pairwise_sum(&terms) * half
    }
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::of(k as f64);
        let p2 = ((T::two() * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::of(n as f64);
    let dp = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, dp)
}

/// Cached `f64` rule; rules are immutable once built.
pub fn gauss_legendre(n: usize) -> Arc<GaussLegendre<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard.entry(n).or_insert_with(|| Arc::new(GaussLegendre::new(n))).clone()
}

/// Sum with pairwise reduction; the order depends only on the slice length.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().fold(T::zero(), |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Flattened composite rule on an interval: `Σ w_i f(x_i) ≈ ∫_a^b f`.
#[derive(Debug, Clone)]
pub struct AxisRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AxisRule {
    /// `panels` equal sub-intervals with `per_panel` Gauss-Legendre nodes each.
    pub fn composite(a: f64, b: f64, panels: usize, per_panel: usize) -> Self {
        let rule = gauss_legendre(per_panel);
        let width = (b - a) / panels as f64;
        let mut points = Vec::with_capacity(panels * per_panel);
        let mut weights = Vec::with_capacity(panels * per_panel);
        for p in 0..panels {
            let lo = a + width * p as f64;
            let half = width / 2.0;
            let mid = lo + half;
            for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
                points.push(mid + half * x);
                weights.push(w * half);
            }
        }
        AxisRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let terms: Vec<f64> = self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).collect();
        pairwise_sum(&terms)
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Node counts and stopping rule for the numerical integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Total nodes per axis at the first refinement level.
    pub nodes: usize,
    pub panels: usize,
    /// Refinement stops once two successive estimates differ by less than
    /// `tolerance · max(1, |estimate|)`.
    pub tolerance: f64,
    pub max_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { nodes: 256, panels: 4, tolerance: 1e-10, max_nodes: 4096 }
    }
}

/// Outcome of a refined integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refined {
    pub value: f64,
    /// Gap between the last two refinement levels.
    pub delta: f64,
    /// Nodes per axis at the accepted level.
    pub nodes: usize,
}

impl QuadratureConfig {
    /// Starting point for nested (2-D and 3-D) integrals. The integrands are
    /// trigonometric polynomials or smooth kernels, so a coarse start with
    /// doubling converges long before the dense 1-D defaults would matter.
    pub fn nested() -> Self {
        QuadratureConfig { nodes: 32, panels: 1, tolerance: 1e-11, max_nodes: 512 }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 16 {
            return Err(Error::invalid(format!("quadrature needs >= 16 nodes per axis, got {}", self.nodes)));
        }
        if self.panels == 0 || self.nodes % self.panels != 0 {
            return Err(Error::invalid("panel count must divide the node count"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("quadrature tolerance must be positive"));
        }
        if self.max_nodes < self.nodes {
            return Err(Error::invalid("max_nodes must be >= nodes"));
        }
        Ok(())
    }

    /// Composite rule on `[a, b]` with `nodes` total points.
    pub fn axis(&self, a: f64, b: f64, nodes: usize) -> AxisRule {
        AxisRule::composite(a, b, self.panels, (nodes / self.panels).max(1))
    }

    /// Runs `estimate(nodes)` at doubling node counts until two successive
    /// values agree.
    pub fn refine<F>(&self, mut estimate: F) -> Result<Refined>
    where
        F: FnMut(usize) -> Result<f64>,
    {
        self.validate()?;
        let mut nodes = self.nodes;
        let mut prev = estimate(nodes)?;
        loop {
            let next_nodes = nodes * 2;
            if next_nodes > self.max_nodes {
                let delta = f64::NAN;
                return Err(Error::NonConvergence { delta, nodes });
            }
            let cur = estimate(next_nodes)?;
            let delta = (cur - prev).abs();
            if !cur.is_finite() {
                return Err(Error::NonConvergence { delta, nodes: next_nodes });
            }
            if delta < self.tolerance * cur.abs().max(1.0) {
                return Ok(Refined { value: cur, delta, nodes: next_nodes });
            }
            if next_nodes * 2 > self.max_nodes {
                return Err(Error::NonConvergence { delta, nodes: next_nodes });
            }
            prev = cur;
            nodes = next_nodes;
        }
    }

    /// One-dimensional refined integral of `f` on `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> Result<Refined> {
        self.refine(|n| Ok(self.axis(a, b, n).integrate(&f)))
    }
}
