//! Moving a live state to another engine.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{Engine, EngineError, StateVector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FallbackEvent {
    pub qubits: usize,
    /// Gates `0..gate_index` ran on `from`, the rest on `to`.
    pub gate_index: usize,
    /// Raw available bytes at the trigger, if known.
    pub available: Option<u64>,
    pub transfer_s: f64,
    pub reinit_s: f64,
    pub from: String,
    pub to: String,
}

impl FallbackEvent {
    /// `T_transfer + T_reinit`.
    pub fn overhead_seconds(&self) -> f64 {
        self.transfer_s + self.reinit_s
    }

    /// One log line, keys in a fixed order.
    pub fn to_json_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            event: &'static str,
            #[serde(flatten)]
            body: &'a FallbackEvent,
        }
        serde_json::to_string(&Line {
            event: "fallback",
            body: self,
        })
        .expect("event serializes")
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FallbackError {
    #[error(
        "fallback destination {to} cannot hold {required} bytes: source short by {source_deficit} bytes, destination short by {destination_deficit} bytes"
    )]
    DestinationInfeasible {
        to: String,
        required: u64,
        source_deficit: u64,
        destination_deficit: u64,
    },
    #[error("fallback to {to} failed: {source}")]
    Engine { to: String, source: EngineError },
}

/// Time to copy `bytes` at `bandwidth` bytes per second.
pub fn predicted_transfer_seconds(bytes: u64, bandwidth: f64) -> f64 {
    bytes as f64 / bandwidth
}

/// Three steps: copy the state into `to`, switch to it, release the source.
/// Amplitudes are copied bit for bit.
pub fn execute_fallback(
    state: StateVector,
    from: &dyn Engine,
    to: &dyn Engine,
    gate_index: usize,
    available: Option<u64>,
) -> Result<(StateVector, FallbackEvent), FallbackError> {
    let required = state.size_bytes();
    let t0 = Instant::now();
    let moved = match to.import_state(&state) {
        Ok(s) => s,
        Err(EngineError::CapacityExceeded { requested, capacity }) => {
            return Err(FallbackError::DestinationInfeasible {
                to: to.name(),
                required: requested,
                source_deficit: available.map_or(requested, |a| requested.saturating_sub(a)),
                destination_deficit: requested.saturating_sub(capacity),
            })
        }
        Err(source) => return Err(FallbackError::Engine { to: to.name(), source }),
    };
    to.synchronize();
    let transfer_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    from.synchronize();
    from.release(state);
    let reinit_s = t1.elapsed().as_secs_f64();

    let event = FallbackEvent {
        qubits: moved.num_qubits(),
        gate_index,
        available,
        transfer_s,
        reinit_s,
        from: from.name(),
        to: to.name(),
    };
    log::info!("{}", event.to_json_line());
    debug_assert_eq!(moved.size_bytes(), required);
    Ok((moved, event))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{GateOp, Precision};
    use crate::engine::{ParallelEngine, ReferenceEngine};
    use crate::memory::model::GIB;
    use num_complex::Complex64;

    #[test]
    fn bell_state_survives_exactly() {
        let from = ParallelEngine::new();
        let to = ReferenceEngine::new();
        let mut s = from.init_state(2, Precision::Double).unwrap();
        from.apply_gate(&mut s, &GateOp::h(0)).unwrap();
        from.apply_gate(&mut s, &GateOp::cnot(0, 1)).unwrap();
        let before = s.to_double();
        let (moved, ev) = execute_fallback(s, &from, &to, 2, Some(GIB)).unwrap();
        assert_eq!(moved.to_double(), before);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(before, vec![Complex64::new(r, 0.0), zero, zero, Complex64::new(r, 0.0)]);
        assert_eq!(ev.gate_index, 2);
        assert_eq!(ev.from, "parallel");
        assert_eq!(ev.to, "reference");
        let line: serde_json::Value = serde_json::from_str(&ev.to_json_line()).unwrap();
        assert_eq!(line["event"], "fallback");
        assert_eq!(line["qubits"], 2);
        assert_eq!(line["available"], GIB);
    }

    #[test]
    fn destination_too_small() {
        let from = ReferenceEngine::new();
        let to = ReferenceEngine::with_capacity(32);
        let s = from.init_state(4, Precision::Double).unwrap();
        let err = execute_fallback(s, &from, &to, 0, Some(100)).unwrap_err();
        assert_eq!(
            err,
            FallbackError::DestinationInfeasible {
                to: "reference".into(),
                required: 256,
                source_deficit: 156,
                destination_deficit: 224,
            }
        );
    }

    #[test]
    fn transfer_prediction() {
        let t = predicted_transfer_seconds(4 * GIB, 32.0 * GIB as f64);
        assert!((t - 0.125).abs() < 1e-12);
    }
}
