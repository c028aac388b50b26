//! End-to-end run: validate, fuse, choose precision, choose engine, execute
//! with memory checkpoints, compare against the reference, sample.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, Precision, Violation};
use crate::engine::{
    run_circuit, sample, state_fidelity, Engine, EngineError, EngineRegistry, SampleError, StateVector,
};
use crate::memory::{
    check_feasible, estimate_memory, Execution, ExecutionError, Executor, FallbackError, FallbackEvent,
    FallbackTrigger, Feasibility, MemoryModelParams, MemoryProbe, ScriptedTrace,
};
use crate::optimize::{depth, fuse, DEFAULT_FUSE_WIDTH};
use crate::precision::{select_precision, PrecisionDecision, DEFAULT_PRECISION_TOLERANCE};
use crate::selector::{select, BenchmarkConfig, SelectError, SelectionCache};

/// Widest circuit for which the reference comparison is run by default.
pub const REFERENCE_COMPARE_LIMIT: usize = 20;
pub const FALLBACK_ENGINE: &str = "reference";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecisionChoice {
    Auto,
    Fixed(Precision),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EngineChoice {
    Auto,
    Named(String),
}

#[derive(Debug, Clone)]
pub enum MemoryMode {
    /// No memory checks.
    Off,
    /// One up-front check against the host's available memory. Every built-in
    /// engine shares host memory, so a failed check is fatal.
    Host,
    /// Simulated memory for the primary engine: up-front check plus the
    /// predictive trigger at every gate boundary.
    Scripted(ScriptedTrace),
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub fuse: bool,
    pub fuse_width: usize,
    pub precision: PrecisionChoice,
    pub precision_tol: f64,
    pub engine: EngineChoice,
    pub bench: BenchmarkConfig,
    pub shots: u64,
    pub seed: u64,
    pub memory: MemoryMode,
    pub memory_reserve: u64,
    /// Seconds the trigger extrapolates ahead.
    pub memory_horizon: f64,
    /// `None` compares when the circuit has at most
    /// [`REFERENCE_COMPARE_LIMIT`] qubits.
    pub compare_reference: Option<bool>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            fuse: true,
            fuse_width: DEFAULT_FUSE_WIDTH,
            precision: PrecisionChoice::Auto,
            precision_tol: DEFAULT_PRECISION_TOLERANCE,
            engine: EngineChoice::Auto,
            bench: BenchmarkConfig::default(),
            shots: 0,
            seed: 0,
            memory: MemoryMode::Off,
            memory_reserve: MemoryModelParams::default().reserve_bytes,
            memory_horizon: 1.0,
            compare_reference: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageSeconds {
    pub parse: f64,
    pub fuse: f64,
    pub precision: f64,
    pub select: f64,
    pub execute: f64,
    pub reference: f64,
    pub sample: f64,
}

impl StageSeconds {
    pub fn total(&self) -> f64 {
        self.parse + self.fuse + self.precision + self.select + self.execute + self.reference + self.sample
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub circuit_name: String,
    pub n: usize,
    pub g_original: usize,
    pub g_fused: usize,
    pub depth_before: usize,
    pub depth_after: usize,
    pub precision_chosen: Precision,
    pub precision_decision: PrecisionDecision,
    pub engine_chosen: String,
    /// Engine that held the final state.
    pub engine_final: String,
    pub selection_from_cache: bool,
    pub wall_seconds: StageSeconds,
    pub fidelity_vs_reference: Option<f64>,
    /// Up-front check against a scripted memory trace.
    pub feasibility: Option<Feasibility>,
    pub fallback_events: Vec<FallbackEvent>,
    pub seed: u64,
    pub shots: u64,
    pub counts: Option<BTreeMap<String, u64>>,
}

impl RunReport {
    /// Zeroes every wall-clock field so reports compare byte for byte.
    pub fn zero_timing(&mut self) {
        self.wall_seconds = StageSeconds::default();
        for e in &mut self.fallback_events {
            e.transfer_s = 0.0;
            e.reinit_s = 0.0;
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid circuit: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("unknown engine {0}")]
    UnknownEngine(String),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error("circuit needs {required} bytes but only {available} are available")]
    Infeasible { required: u64, available: u64 },
    #[error(transparent)]
    Execution(ExecutionError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("reference comparison failed: {0}")]
    Reference(EngineError),
}

impl PipelineError {
    /// Memory-related failures, as opposed to bad input or engine faults.
    pub fn is_infeasible(&self) -> bool {
        match self {
            PipelineError::Infeasible { .. } => true,
            PipelineError::Execution(ExecutionError::Fallback(FallbackError::DestinationInfeasible { .. })) => true,
            PipelineError::Execution(ExecutionError::Engine(e)) | PipelineError::Reference(e) => {
                matches!(e, EngineError::CapacityExceeded { .. } | EngineError::AllocationFailed { .. })
            }
            _ => false,
        }
    }
}

impl From<ExecutionError> for PipelineError {
    fn from(e: ExecutionError) -> Self {
        PipelineError::Execution(e)
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub state: StateVector,
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    *slot = t.elapsed().as_secs_f64();
    out
}

pub fn run_pipeline(
    circuit: &Circuit,
    registry: &EngineRegistry,
    options: &RunOptions,
    cache: &SelectionCache,
) -> Result<RunOutput, PipelineError> {
    let violations = circuit.validate();
    if !violations.is_empty() {
        return Err(PipelineError::Invalid(violations));
    }
    let mut times = StageSeconds::default();
    let n = circuit.num_qubits;

    let (fused, depth_before, depth_after) = timed(&mut times.fuse, || {
        if options.fuse {
            let (fused, r) = fuse(circuit, options.fuse_width);
            (fused, r.original_depth, r.fused_depth)
        } else {
            let d = depth(circuit);
            (circuit.clone(), d, d)
        }
    });

    let decision = timed(&mut times.precision, || {
        let mut d = select_precision(n, fused.len(), options.precision_tol);
        if let PrecisionChoice::Fixed(p) = options.precision {
            d.chosen = p;
            d.rationale = format!("{p} requested");
        }
        d
    });
    let precision = decision.chosen;
    log::info!("precision: {}", decision.rationale);

    let params = MemoryModelParams {
        reserve_bytes: options.memory_reserve,
        ..MemoryModelParams::for_circuit(&fused, precision)
    };
    let mut trigger = FallbackTrigger::Never;
    match &options.memory {
        MemoryMode::Off => {}
        MemoryMode::Host => {
            let probe = MemoryProbe::host();
            probe.poll();
            // Host readings vary run to run, so they stay out of the report.
            let f = check_feasible(n, &params, &probe.window());
            log::info!("host memory check: {f:?}");
            if let Feasibility::Infeasible { required, available, .. } = f {
                return Err(PipelineError::Infeasible { required, available });
            }
        }
        MemoryMode::Scripted(trace) => {
            trigger = FallbackTrigger::Probe {
                probe: MemoryProbe::scripted(trace.clone()),
                params,
                horizon: options.memory_horizon,
            };
        }
    }

    let (primary, from_cache) = {
        let t = Instant::now();
        let picked = match &options.engine {
            EngineChoice::Named(name) => (
                registry.get(name).map_err(|_| PipelineError::UnknownEngine(name.clone()))?,
                false,
            ),
            EngineChoice::Auto => {
                let s = select(&fused, registry.engines(), precision, &options.bench, cache)?;
                log::info!("selected engine {} (cached: {})", s.engine, s.from_cache);
                let engine = registry.get(&s.engine).map_err(|_| PipelineError::UnknownEngine(s.engine.clone()))?;
                (engine, s.from_cache)
            }
        };
        times.select = t.elapsed().as_secs_f64();
        picked
    };
    let fallback: Arc<dyn Engine> = registry.get(FALLBACK_ENGINE).unwrap_or_else(|_| primary.clone());

    let t = Instant::now();
    let Execution {
        state,
        engine: engine_final,
        events,
        feasibility: probe_feasibility,
        ..
    } = Executor::new(primary.clone(), fallback.clone())
        .with_trigger(trigger)
        .run(&fused, precision)?;
    times.execute = t.elapsed().as_secs_f64();
    if let (Some(Feasibility::Infeasible { required, available, .. }), true) =
        (probe_feasibility, primary.name() == fallback.name())
    {
        return Err(PipelineError::Infeasible { required, available });
    }

    let compare = options.compare_reference.unwrap_or(n <= REFERENCE_COMPARE_LIMIT);
    let fidelity_vs_reference = if compare {
        let t = Instant::now();
        let reference = registry.get(FALLBACK_ENGINE).unwrap_or_else(|_| fallback.clone());
        let expected = run_circuit(reference.as_ref(), circuit, Precision::Double).map_err(PipelineError::Reference)?;
        let f = state_fidelity(&expected, &state).map_err(PipelineError::Reference)?;
        times.reference = t.elapsed().as_secs_f64();
        Some(f)
    } else {
        None
    };

    let counts = if options.shots > 0 {
        let t = Instant::now();
        let result = sample(&state, options.shots, options.seed)?;
        times.sample = t.elapsed().as_secs_f64();
        Some(result.counts)
    } else {
        None
    };

    let report = RunReport {
        circuit_name: circuit.name.clone(),
        n,
        g_original: circuit.len(),
        g_fused: fused.len(),
        depth_before,
        depth_after,
        precision_chosen: precision,
        precision_decision: decision,
        engine_chosen: primary.name(),
        engine_final,
        selection_from_cache: from_cache,
        wall_seconds: times,
        fidelity_vs_reference,
        feasibility: probe_feasibility,
        fallback_events: events,
        seed: options.seed,
        shots: options.shots,
        counts,
    };
    Ok(RunOutput { report, state })
}

/// Host check used by the scaling benchmark: `Err` when `n` qubits do not
/// fit in currently available host memory.
pub fn host_feasible(n: usize, precision: Precision, reserve: u64) -> Result<(), String> {
    let params = MemoryModelParams {
        s_prec: precision.amplitude_bytes(),
        q_max: 1,
        reserve_bytes: reserve,
        ..MemoryModelParams::default()
    };
    let probe = MemoryProbe::host();
    probe.poll();
    match check_feasible(n, &params, &probe.window()) {
        Feasibility::Infeasible { required, available, .. } => Err(format!(
            "{n} qubits need {required} bytes, {available} available after reserve"
        )),
        Feasibility::ProbeUnavailable { .. } if estimate_memory(n, &params) == u64::MAX => {
            Err(format!("{n} qubits exceed the addressable state size"))
        }
        _ => Ok(()),
    }
}
