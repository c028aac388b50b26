//! Dense density-matrix simulation with per-gate depolarizing noise, and
//! distances between outcome distributions.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, GateOp};
use crate::engine::{bitstring, Amplitudes, Engine, ReferenceEngine, SampleResult, StateVector};

pub const DEFAULT_QUBIT_CAP: usize = 8;
pub const MAX_QUBITS: usize = 10;

/// Bitstring (qubit 0 rightmost) to probability.
pub type Distribution = BTreeMap<String, f64>;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("{num_qubits} qubits exceeds the density-matrix cap of {cap}")]
    TooManyQubits { num_qubits: usize, cap: usize },
    #[error("depolarizing probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("distributions are over different bit lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("distribution sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("counts contain no shots")]
    EmptyShots,
}

/// `rho` over `n` qubits, row-major `2^n x 2^n`.
///
/// Stored as a `2n`-qubit vector: column bits are qubits `0..n`, row bits
/// are `n..2n`. Conjugation `U rho U^dagger` is then `U` on the row bits and
/// `conj(U)` on the column bits, which reuses the state-vector kernels.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    num_qubits: usize,
    vec: StateVector,
}

impl DensityMatrix {
    /// `|0...0><0...0|`.
    pub fn zero_state(num_qubits: usize) -> Result<Self, NoiseError> {
        Self::zero_state_with_cap(num_qubits, DEFAULT_QUBIT_CAP)
    }

    pub fn zero_state_with_cap(num_qubits: usize, cap: usize) -> Result<Self, NoiseError> {
        let cap = cap.min(MAX_QUBITS);
        if num_qubits > cap {
            return Err(NoiseError::TooManyQubits { num_qubits, cap });
        }
        if num_qubits == 0 {
            return Err(NoiseError::InvalidCircuit("no qubits".into()));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << (2 * num_qubits)];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            vec: StateVector::from_double(2 * num_qubits, amps),
        })
    }

    /// `|psi><psi|`.
    pub fn from_pure(state: &StateVector) -> Result<Self, NoiseError> {
        let n = state.num_qubits();
        if n > MAX_QUBITS {
            return Err(NoiseError::TooManyQubits { num_qubits: n, cap: MAX_QUBITS });
        }
        let psi = state.to_double();
        let dim = psi.len();
        let mut amps = Vec::with_capacity(dim * dim);
        for r in &psi {
            for c in &psi {
                amps.push(r * c.conj());
            }
        }
        Ok(Self {
            num_qubits: n,
            vec: StateVector::from_double(2 * n, amps),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.vec.amplitude(row * self.dim() + col)
    }

    fn entries_mut(&mut self) -> &mut [Complex64] {
        match self.vec.amplitudes_mut() {
            Amplitudes::Double(v) => v,
            Amplitudes::Single(_) => unreachable!("density matrices are double precision"),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|k| self.get(k, k)).sum()
    }

    /// `max |rho_rc - conj(rho_cr)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Smallest diagonal entry or 2x2 principal minor; negative values
    /// signal loss of positivity.
    pub fn min_principal_minor(&self) -> f64 {
        let d = self.dim();
        let mut worst = f64::INFINITY;
        for i in 0..d {
            let a = self.get(i, i).re;
            worst = worst.min(a);
            for j in i + 1..d {
                let b = self.get(j, j).re;
                worst = worst.min(a * b - self.get(i, j).norm_sqr());
            }
        }
        worst
    }

    /// `rho <- U rho U^dagger` for a valid gate on this register.
    pub fn apply_unitary(&mut self, op: &GateOp) -> Result<(), NoiseError> {
        let n = self.num_qubits;
        let u = op.effective_unitary();
        let engine = ReferenceEngine::new();
        let rows: Vec<usize> = op.targets.iter().map(|t| t + n).collect();
        engine
            .apply_gate(&mut self.vec, &GateOp::custom(u.clone(), rows))
            .and_then(|_| engine.apply_gate(&mut self.vec, &GateOp::custom(u.conj(), op.targets.clone())))
            .map_err(|e| NoiseError::InvalidCircuit(e.to_string()))
    }

    /// Single-qubit depolarizing channel
    /// `(1-p) rho + (p/3)(X rho X + Y rho Y + Z rho Z)` on `qubit`, in closed
    /// form: populations of the qubit mix at rate `2p/3`, coherences shrink
    /// by `1 - 4p/3`.
    pub fn depolarize(&mut self, qubit: usize, p: f64) {
        let d = self.dim();
        let bit = 1usize << qubit;
        let keep = 1.0 - 2.0 * p / 3.0;
        let swap = 2.0 * p / 3.0;
        let shrink = 1.0 - 4.0 * p / 3.0;
        let rho = self.entries_mut();
        for r in 0..d {
            for c in 0..d {
                let same = (r & bit) == (c & bit);
                if !same {
                    rho[r * d + c] *= shrink;
                } else if r & bit == 0 {
                    let (i, j) = (r * d + c, (r | bit) * d + (c | bit));
                    let (a, b) = (rho[i], rho[j]);
                    rho[i] = a * keep + b * swap;
                    rho[j] = b * keep + a * swap;
                }
            }
        }
    }

    /// `<x|rho|x>` for every basis string.
    pub fn measure_distribution(&self) -> Distribution {
        (0..self.dim())
            .map(|k| (bitstring(k, self.num_qubits), self.get(k, k).re))
            .collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.get(k, k).re).collect()
    }
}

/// Runs `circuit` from `|0...0>`, applying the depolarizing channel to each
/// qubit a gate touches right after that gate.
pub fn evolve_noisy(circuit: &Circuit, p: f64) -> Result<DensityMatrix, NoiseError> {
    evolve_noisy_with_cap(circuit, p, DEFAULT_QUBIT_CAP)
}

pub fn evolve_noisy_with_cap(circuit: &Circuit, p: f64, cap: usize) -> Result<DensityMatrix, NoiseError> {
    evolve_noisy_observed(circuit, p, cap, |_| {})
}

/// As [`evolve_noisy_with_cap`], calling `observe` after every channel.
pub fn evolve_noisy_observed(
    circuit: &Circuit,
    p: f64,
    cap: usize,
    mut observe: impl FnMut(&DensityMatrix),
) -> Result<DensityMatrix, NoiseError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(NoiseError::InvalidProbability(p));
    }
    if let Some(v) = circuit.validate().first() {
        return Err(NoiseError::InvalidCircuit(v.to_string()));
    }
    let mut rho = DensityMatrix::zero_state_with_cap(circuit.num_qubits, cap)?;
    for op in &circuit.gates {
        rho.apply_unitary(op)?;
        observe(&rho);
        if p > 0.0 {
            let mut touched = op.targets.clone();
            touched.sort_unstable();
            touched.dedup();
            for q in touched {
                rho.depolarize(q, p);
                observe(&rho);
            }
        }
    }
    Ok(rho)
}

/// Probabilities `|alpha_k|^2` keyed by bitstring.
pub fn state_distribution(state: &StateVector) -> Distribution {
    state
        .probabilities()
        .into_iter()
        .enumerate()
        .map(|(k, p)| (bitstring(k, state.num_qubits()), p))
        .collect()
}

/// Relative frequencies of sampled counts.
pub fn counts_distribution(counts: &SampleResult) -> Result<Distribution, NoiseError> {
    if counts.shots == 0 {
        return Err(NoiseError::EmptyShots);
    }
    let n = counts.shots as f64;
    Ok(counts.counts.iter().map(|(k, &c)| (k.clone(), c as f64 / n)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistributionMetrics {
    /// `(sum_x sqrt(p(x) q(x)))^2`.
    pub classical_fidelity: f64,
    /// `(1/2) sum_x |p(x) - q(x)|`.
    pub tvd: f64,
}

const METRIC_NORM_TOLERANCE: f64 = 1e-6;

fn bit_length(d: &Distribution) -> Result<Option<usize>, NoiseError> {
    let mut len = None;
    for k in d.keys() {
        match len {
            None => len = Some(k.len()),
            Some(l) if l != k.len() => return Err(NoiseError::LengthMismatch(l, k.len())),
            _ => {}
        }
    }
    Ok(len)
}

/// Missing outcomes count as probability 0.
pub fn metrics(p: &Distribution, q: &Distribution) -> Result<DistributionMetrics, NoiseError> {
    if let (Some(a), Some(b)) = (bit_length(p)?, bit_length(q)?) {
        if a != b {
            return Err(NoiseError::LengthMismatch(a, b));
        }
    }
    for d in [p, q] {
        let s: f64 = d.values().sum();
        if (s - 1.0).abs() > METRIC_NORM_TOLERANCE {
            return Err(NoiseError::NotNormalized(s));
        }
    }
    let keys: BTreeSet<&String> = p.keys().chain(q.keys()).collect();
    let (mut overlap, mut l1) = (0.0, 0.0);
    for k in keys {
        let a = p.get(k).copied().unwrap_or(0.0).max(0.0);
        let b = q.get(k).copied().unwrap_or(0.0).max(0.0);
        overlap += (a * b).sqrt();
        l1 += (a - b).abs();
    }
    Ok(DistributionMetrics {
        classical_fidelity: (overlap * overlap).min(1.0),
        tvd: (0.5 * l1).min(1.0),
    })
}

/// Fraction of shots landing in `ideal_support`.
pub fn correct_outcome_probability<S: AsRef<str>>(counts: &SampleResult, ideal_support: &[S]) -> Result<f64, NoiseError> {
    if counts.shots == 0 {
        return Err(NoiseError::EmptyShots);
    }
    let support: BTreeSet<&str> = ideal_support.iter().map(|s| s.as_ref()).collect();
    let hits: u64 = counts
        .counts
        .iter()
        .filter(|(k, _)| support.contains(k.as_str()))
        .map(|(_, c)| c)
        .sum();
    Ok(hits as f64 / counts.shots as f64)
}
