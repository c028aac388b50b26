//! Memory footprint estimate and availability check.

use serde::Serialize;

use super::probe::MemoryWindow;
use crate::circuit::{Circuit, Precision};

pub const MIB: u64 = 1 << 20;
pub const GIB: u64 = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MemoryModelParams {
    /// Bytes per amplitude.
    pub s_prec: u64,
    /// Unitary matrices resident at once.
    pub g_max: u64,
    /// Widest gate in the circuit, qubits.
    pub q_max: u32,
    pub workspace_bytes: u64,
    pub reserve_bytes: u64,
}

impl Default for MemoryModelParams {
    fn default() -> Self {
        Self {
            s_prec: Precision::Double.amplitude_bytes(),
            g_max: 4,
            q_max: 2,
            workspace_bytes: 64 * MIB,
            reserve_bytes: 512 * MIB,
        }
    }
}

impl MemoryModelParams {
    pub fn for_circuit(circuit: &Circuit, precision: Precision) -> Self {
        Self {
            s_prec: precision.amplitude_bytes(),
            q_max: circuit.max_gate_width() as u32,
            ..Self::default()
        }
    }
}

fn pow2(e: u32) -> u64 {
    1u64.checked_shl(e).unwrap_or(u64::MAX)
}

/// `2^n * s + g_max * (2^q_max)^2 * s + workspace`, saturating.
pub fn estimate_memory(num_qubits: usize, params: &MemoryModelParams) -> u64 {
    let state = pow2(num_qubits.min(64) as u32).saturating_mul(params.s_prec);
    let gate_dim = pow2(params.q_max);
    let gates = params
        .g_max
        .saturating_mul(gate_dim.saturating_mul(gate_dim))
        .saturating_mul(params.s_prec);
    state.saturating_add(gates).saturating_add(params.workspace_bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Feasibility {
    Feasible { required: u64, available: u64 },
    Infeasible { required: u64, available: u64, deficit: u64 },
    /// No reading could be taken; treated as infeasible.
    ProbeUnavailable { required: u64 },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible { .. })
    }
}

/// Usable memory is the latest raw reading minus the reserve; the run fits
/// if the estimate does not exceed it.
pub fn check_feasible(num_qubits: usize, params: &MemoryModelParams, window: &MemoryWindow) -> Feasibility {
    let required = estimate_memory(num_qubits, params);
    match window.latest() {
        None => Feasibility::ProbeUnavailable { required },
        Some(r) => feasibility(required, r.available.saturating_sub(params.reserve_bytes)),
    }
}

/// Compares a requirement with already reserve-adjusted availability.
pub fn feasibility(required: u64, available: u64) -> Feasibility {
    if required <= available {
        Feasibility::Feasible { required, available }
    } else {
        Feasibility::Infeasible {
            required,
            available,
            deficit: required - available,
        }
    }
}
