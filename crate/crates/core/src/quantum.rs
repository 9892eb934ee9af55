//! Points of `S^{2^{n+1}-1}` as `n`-qubit states, with density matrices,
//! the phase-invariant variance and the fidelity to `|0⟩`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampler::{empirical_variance, sample_law, ErrorLaw, SampleBatch};
use crate::sphere::SpherePoint;

pub const MAX_QUBITS: usize = 10;
const ACCUMULATE_CHUNK: usize = 1 << 14;

/// Qubit count `n` for a sphere of dimension `d = 2^{n+1} - 1`.
pub fn qubits_for_dim(d: usize) -> Result<usize> {
    let len = d + 1;
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::invalid(format!("S^{d} does not carry qubit states: d + 1 must be 2^(n+1)")));
    }
    let n = len.trailing_zeros() as usize - 1;
    if n == 0 {
        return Err(Error::invalid("the circle S^1 carries no qubit (need n >= 1)"));
    }
    if n > MAX_QUBITS {
        return Err(Error::Guard(format!("{n} qubits exceed the limit of {MAX_QUBITS}")));
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n = amplitudes.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::invalid("a state needs 2^n amplitudes with n >= 1"));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("state norm² is {norm}, not 1")));
        }
        Ok(StateVector { amplitudes })
    }

    pub fn qubits(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// The same state times a global phase `e^{iφ}`.
    pub fn with_phase(&self, phi: f64) -> Self {
        let w = Complex64::from_polar(1.0, phi);
        StateVector { amplitudes: self.amplitudes.iter().map(|a| a * w).collect() }
    }
}

/// Amplitude `m` is `x_{2m} + i x_{2m+1}`.
pub fn point_to_state(x: &SpherePoint<f64>) -> Result<StateVector> {
    qubits_for_dim(x.dim())?;
    let amplitudes = x.coords().chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
    StateVector::new(amplitudes)
}

fn row_to_amplitudes(row: &[f64]) -> impl Iterator<Item = Complex64> + '_ {
    row.chunks_exact(2).map(|p| Complex64::new(p[0], p[1]))
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Checks the invariants within the tolerances of Monte Carlo estimates.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid("density matrix must be square"));
        }
        let herm_gap = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_gap > 1e-10 {
            return Err(Error::invalid(format!("matrix is not Hermitian (gap {herm_gap})")));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
            return Err(Error::invalid(format!("trace is {trace}, not 1")));
        }
        let min_eig = matrix.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-9 {
            return Err(Error::invalid(format!("smallest eigenvalue {min_eig} is negative")));
        }
        Ok(DensityMatrix { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `⟨0|ρ|0⟩`.
    pub fn ground_population(&self) -> f64 {
        self.matrix[(0, 0)].re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Row-major `[[re, im], ...]` rows.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| [self.matrix[(i, j)].re, self.matrix[(i, j)].im]).collect())
            .collect();
        serde_json::json!(rows)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_gap(&self, other: &DensityMatrix) -> f64 {
        (&self.matrix - &other.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn accumulate(states: impl IndexedParallelIterator<Item = Vec<Complex64>>, side: usize) -> DMatrix<Complex64> {
    let chunks: Vec<DMatrix<Complex64>> = states
        .chunks(ACCUMULATE_CHUNK)
        .map(|chunk| {
            let mut m = DMatrix::<Complex64>::zeros(side, side);
            for psi in chunk {
                for i in 0..side {
                    for j in 0..side {
                        m[(i, j)] += psi[i] * psi[j].conj();
                    }
                }
            }
            m
        })
        .collect();
    chunks.into_iter().fold(DMatrix::zeros(side, side), |acc, m| acc + m)
}

/// `ρ = mean |Ψ⟩⟨Ψ|` over the batch.
pub fn density_matrix_from_batch(batch: &SampleBatch) -> Result<DensityMatrix> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let n = qubits_for_dim(batch.d)?;
    let side = 1 << n;
    let rows: Vec<&[f64]> = batch.rows().collect();
    let sum = accumulate(rows.par_iter().map(|r| row_to_amplitudes(r).collect()), side);
    DensityMatrix::new(sum / Complex64::new(rows.len() as f64, 0.0))
}

/// `ρ` from explicit states, used for the phase-invariance checks.
pub fn density_matrix_from_states(states: &[StateVector]) -> Result<DensityMatrix> {
    let first = states.first().ok_or_else(|| Error::invalid("no states"))?;
    let side = first.amplitudes.len();
    if states.iter().any(|s| s.amplitudes.len() != side) {
        return Err(Error::invalid("states of different sizes"));
    }
    let sum = accumulate(states.par_iter().map(|s| s.amplitudes.clone()), side);
    DensityMatrix::new(sum / Complex64::new(states.len() as f64, 0.0))
}

/// Estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

fn mean_and_se(values: impl Iterator<Item = f64>) -> Estimate {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for x in values {
        n += 1.0;
        let delta = x - mean;
        mean += delta / n;
        m2 += delta * (x - mean);
    }
    let sd = if n > 1.0 { (m2 / (n - 1.0)).sqrt() } else { 0.0 };
    Estimate { value: mean, std_error: sd / f64::sqrt(n.max(1.0)) }
}

/// `V_q = 2 - 2 E[√(x0² + x1²)]`.
pub fn quantum_variance(batch: &SampleBatch) -> Result<Estimate> {
    qubits_for_dim(batch.d)?;
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let m = mean_and_se(batch.rows().map(|r| r[0].hypot(r[1])));
    Ok(Estimate { value: (2.0 - 2.0 * m.value).clamp(0.0, 2.0), std_error: 2.0 * m.std_error })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityReport {
    /// `F = √E[x0² + x1²]`.
    pub fidelity: f64,
    pub std_error: f64,
    /// `1 - V_q / 2`.
    pub lower: f64,
    /// `√(1 - V_q / 2)`.
    pub upper: f64,
    pub quantum_variance: f64,
    pub quantum_variance_se: f64,
    /// Ordinary variance `2 - 2 E[x0]` of the same batch.
    pub variance: f64,
    pub variance_se: f64,
    pub holds: bool,
}

pub fn fidelity(batch: &SampleBatch) -> Result<FidelityReport> {
    let vq = quantum_variance(batch)?;
    let pop = mean_and_se(batch.rows().map(|r| r[0] * r[0] + r[1] * r[1]));
    let f = pop.value.clamp(0.0, 1.0).sqrt();
    let se = if f > 0.0 { pop.std_error / (2.0 * f) } else { pop.std_error.sqrt() };
    let lower = 1.0 - vq.value / 2.0;
    let upper = lower.max(0.0).sqrt();
    let v = empirical_variance(batch)?;
    // the sandwich is exact for an empirical measure, up to rounding
    let slack = 1e-12;
    Ok(FidelityReport {
        fidelity: f,
        std_error: se,
        lower,
        upper,
        quantum_variance: vq.value,
        quantum_variance_se: vq.std_error,
        variance: v.variance,
        variance_se: v.std_error,
        holds: lower <= f + slack && f <= upper + slack,
    })
}

/// Everything quantum about one law, from `samples` seeded draws.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumReport {
    pub qubits: usize,
    pub density_matrix: DensityMatrix,
    pub fidelity: FidelityReport,
}

pub fn quantum_report(law: &ErrorLaw, samples: usize, seed: u64) -> Result<QuantumReport> {
    let qubits = qubits_for_dim(law.d())?;
    let batch = sample_law(law, samples, seed, 0)?;
    Ok(QuantumReport { qubits, density_matrix: density_matrix_from_batch(&batch)?, fidelity: fidelity(&batch)? })
}
