//! Measurement sampling by inverse CDF.
//!
//! Draws come from a ChaCha8 stream seeded with the caller's seed, so the
//! same probabilities, shot count and seed give identical counts on every
//! platform regardless of which engine produced the state.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::StateVector;

/// Maximum `|sum p - 1|` accepted before sampling.
pub const SAMPLE_NORM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleResult {
    pub shots: u64,
    /// Bitstring (qubit 0 rightmost) to count. Only observed outcomes appear.
    pub counts: BTreeMap<String, u64>,
}

impl SampleResult {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("state norm {norm} deviates from 1 by more than {SAMPLE_NORM_TOLERANCE}")]
    Unnormalized { norm: f64 },
}

/// Basis index `k` as an `n`-character bitstring, qubit 0 rightmost.
pub fn bitstring(k: usize, num_qubits: usize) -> String {
    format!("{k:0num_qubits$b}")
}

/// Draws `shots` outcomes from `|alpha_k|^2`.
pub fn sample(state: &StateVector, shots: u64, seed: u64) -> Result<SampleResult, SampleError> {
    let probs = state.probabilities();
    let norm: f64 = probs.iter().sum();
    if (norm - 1.0).abs() > SAMPLE_NORM_TOLERANCE || !norm.is_finite() {
        return Err(SampleError::Unnormalized { norm });
    }
    Ok(sample_distribution(&probs, state.num_qubits(), shots, seed))
}

/// Draws `shots` outcomes from an explicit (not necessarily normalised)
/// distribution over `2^num_qubits` basis states.
pub fn sample_distribution(probs: &[f64], num_qubits: usize, shots: u64, seed: u64) -> SampleResult {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p.max(0.0);
        cdf.push(acc);
    }
    let total = acc;
    let last_nonzero = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits: BTreeMap<usize, u64> = BTreeMap::new();
    for _ in 0..shots {
        let u = rng.gen::<f64>() * total;
        let idx = cdf.partition_point(|&c| c <= u).min(last_nonzero);
        *hits.entry(idx).or_default() += 1;
    }
    SampleResult {
        shots,
        counts: hits
            .into_iter()
            .map(|(k, c)| (bitstring(k, num_qubits), c))
            .collect(),
    }
}
