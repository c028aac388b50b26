//! Gate-by-gate execution with fallback checkpoints.
//!
//! The trigger is consulted before every gate. A kernel already running
//! cannot be migrated, so gate boundaries are the only switch points.

use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use super::fallback::{execute_fallback, FallbackError, FallbackEvent};
use super::model::{check_feasible, Feasibility, MemoryModelParams};
use super::probe::{should_fallback, MemoryProbe};
use crate::circuit::{Circuit, Precision};
use crate::engine::{Engine, EngineError, StateVector};

#[derive(Debug, Clone)]
pub enum FallbackTrigger {
    Never,
    /// Migrate just before gate `i`; `i == gate count` migrates after the last gate.
    ForceAtGate(usize),
    /// Check feasibility up front, then watch the probe's trend.
    Probe {
        probe: MemoryProbe,
        params: MemoryModelParams,
        /// Seconds to extrapolate ahead.
        horizon: f64,
    },
}

#[derive(Debug)]
pub struct Execution {
    pub state: StateVector,
    /// Engine holding the final state.
    pub engine: String,
    pub events: Vec<FallbackEvent>,
    /// Up-front check result when a probe was configured.
    pub feasibility: Option<Feasibility>,
    pub elapsed_s: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ExecutionError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Fallback(#[from] FallbackError),
}

pub struct Executor {
    primary: Arc<dyn Engine>,
    fallback: Arc<dyn Engine>,
    trigger: FallbackTrigger,
}

impl Executor {
    pub fn new(primary: Arc<dyn Engine>, fallback: Arc<dyn Engine>) -> Self {
        Self {
            primary,
            fallback,
            trigger: FallbackTrigger::Never,
        }
    }

    pub fn with_trigger(mut self, trigger: FallbackTrigger) -> Self {
        self.trigger = trigger;
        self
    }

    fn latest_available(&self) -> Option<u64> {
        match &self.trigger {
            FallbackTrigger::Probe { probe, .. } => probe.window().latest().map(|r| r.available),
            _ => None,
        }
    }

    fn fires_before(&self, gate: usize) -> bool {
        match &self.trigger {
            FallbackTrigger::Never => false,
            FallbackTrigger::ForceAtGate(k) => *k == gate,
            FallbackTrigger::Probe { probe, params, horizon } => {
                probe.checkpoint();
                should_fallback(&probe.window(), params, *horizon)
            }
        }
    }

    /// Starts directly on the fallback engine.
    fn start_on_fallback(&self, n: usize, precision: Precision) -> Result<(StateVector, FallbackEvent), EngineError> {
        let t = Instant::now();
        let state = self.fallback.init_state(n, precision)?;
        let event = FallbackEvent {
            qubits: n,
            gate_index: 0,
            available: self.latest_available(),
            transfer_s: 0.0,
            reinit_s: t.elapsed().as_secs_f64(),
            from: self.primary.name(),
            to: self.fallback.name(),
        };
        log::info!("{}", event.to_json_line());
        Ok((state, event))
    }

    pub fn run(&self, circuit: &Circuit, precision: Precision) -> Result<Execution, ExecutionError> {
        let start = Instant::now();
        let n = circuit.num_qubits;
        let can_fall_back = self.primary.name() != self.fallback.name();
        let mut events = Vec::new();
        let mut feasibility = None;
        let mut on_fallback = false;

        if let FallbackTrigger::Probe { probe, params, .. } = &self.trigger {
            probe.checkpoint();
            let f = check_feasible(n, params, &probe.window());
            if !f.is_feasible() {
                log::info!("pre-simulation check: {f:?}");
                on_fallback = can_fall_back;
            }
            feasibility = Some(f);
        }

        let mut state = if on_fallback {
            let (s, ev) = self.start_on_fallback(n, precision)?;
            events.push(ev);
            s
        } else {
            match self.primary.init_state(n, precision) {
                Ok(s) => s,
                Err(EngineError::CapacityExceeded { .. } | EngineError::AllocationFailed { .. }) if can_fall_back => {
                    let (s, ev) = self.start_on_fallback(n, precision)?;
                    events.push(ev);
                    on_fallback = true;
                    s
                }
                Err(e) => return Err(e.into()),
            }
        };

        let g = circuit.gates.len();
        for i in 0..=g {
            if !on_fallback && can_fall_back && self.fires_before(i) {
                let available = self.latest_available();
                let (moved, ev) = execute_fallback(state, self.primary.as_ref(), self.fallback.as_ref(), i, available)?;
                state = moved;
                events.push(ev);
                on_fallback = true;
            }
            if let Some(op) = circuit.gates.get(i) {
                let engine = if on_fallback { &self.fallback } else { &self.primary };
                engine.apply_gate(&mut state, op).map_err(|e| e.at_gate(i))?;
            }
        }
        let active = if on_fallback { &self.fallback } else { &self.primary };
        active.synchronize();
        Ok(Execution {
            state,
            engine: active.name(),
            events,
            feasibility,
            elapsed_s: start.elapsed().as_secs_f64(),
        })
    }
}
