//! Execution engines.
//!
//! An engine owns a memory space and a strategy for walking the amplitude
//! array. Two engines ship with the crate: [`ReferenceEngine`], a plain
//! sequential implementation that doubles as the correctness oracle and the
//! universal fallback, and [`ParallelEngine`], a chunked data-parallel kernel.
//! Further engines (for example an accelerator) plug in through [`Engine`].

mod kernel;
mod parallel;
mod reference;
mod sample;
mod state;

use std::fmt;
use std::sync::Arc;

use num_complex::{Complex, Complex32, Complex64};
use thiserror::Error;

use crate::circuit::{Circuit, GateOp, Precision};

pub use kernel::{GateKernel, Real};
pub use parallel::ParallelEngine;
pub use reference::ReferenceEngine;
pub use sample::{bitstring, sample, sample_distribution, SampleError, SampleResult};
pub use state::{Amplitudes, StateVector};

pub const REFERENCE: &str = "reference";
pub const PARALLEL: &str = "parallel";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EngineId {
    pub name: String,
    pub requires_accelerator: bool,
}

impl EngineId {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            requires_accelerator: false,
        }
    }

    pub fn accelerator(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            requires_accelerator: true,
        }
    }
}

impl fmt::Display for EngineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("allocation of {requested} bytes exceeds engine capacity of {capacity} bytes")]
    CapacityExceeded { requested: u64, capacity: u64 },
    #[error("allocation of {requested} bytes failed")]
    AllocationFailed { requested: u64 },
    #[error("gate {gate_index:?} targets qubit {target} but the state has {num_qubits} qubit(s)")]
    TargetOutOfRange {
        gate_index: Option<usize>,
        target: usize,
        num_qubits: usize,
    },
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("state has no qubits")]
    NoQubits,
    #[error("engine {0} is not available on this host")]
    Unavailable(String),
    #[error("state fidelity needs equal dimensions, got {0} and {1} qubits")]
    DimensionMismatch(usize, usize),
}

impl EngineError {
    /// Bytes requested by a failed allocation, if this is an allocation error.
    pub fn requested_bytes(&self) -> Option<u64> {
        match self {
            EngineError::CapacityExceeded { requested, .. } | EngineError::AllocationFailed { requested } => {
                Some(*requested)
            }
            _ => None,
        }
    }

    pub(crate) fn at_gate(self, index: usize) -> Self {
        match self {
            EngineError::TargetOutOfRange { target, num_qubits, .. } => EngineError::TargetOutOfRange {
                gate_index: Some(index),
                target,
                num_qubits,
            },
            other => other,
        }
    }
}

/// Bytes needed for a `2^n` state at `precision`; saturates instead of
/// overflowing.
pub fn state_bytes(num_qubits: usize, precision: Precision) -> u64 {
    if num_qubits >= 60 {
        return u64::MAX;
    }
    (1u64 << num_qubits).saturating_mul(precision.amplitude_bytes())
}

/// Common backend interface: allocate, apply gates, hand states over.
pub trait Engine: Send + Sync {
    fn id(&self) -> EngineId;

    fn name(&self) -> String {
        self.id().name
    }

    /// Usable memory of this engine's address space, if bounded.
    fn capacity_bytes(&self) -> Option<u64> {
        None
    }

    /// Whether the hardware this engine needs is present.
    fn is_available(&self) -> bool {
        true
    }

    /// Allocates `|0...0>`.
    fn init_state(&self, num_qubits: usize, precision: Precision) -> Result<StateVector, EngineError> {
        allocate_state(num_qubits, precision, self.capacity_bytes())
    }

    /// Applies one gate in place.
    fn apply_gate(&self, state: &mut StateVector, op: &GateOp) -> Result<(), EngineError>;

    /// Blocks until queued work has finished. Asynchronous engines override this.
    fn synchronize(&self) {}

    /// Copies a state produced elsewhere into this engine's memory space.
    fn import_state(&self, state: &StateVector) -> Result<StateVector, EngineError> {
        let requested = state.size_bytes();
        if let Some(capacity) = self.capacity_bytes() {
            if requested > capacity {
                return Err(EngineError::CapacityExceeded { requested, capacity });
            }
        }
        Ok(state.clone())
    }

    /// Releases a state this engine owns.
    fn release(&self, state: StateVector) {
        drop(state);
    }
}

/// Allocates `|0...0>` honouring an optional capacity limit. Host allocation
/// failure is reported rather than aborting.
pub fn allocate_state(
    num_qubits: usize,
    precision: Precision,
    capacity: Option<u64>,
) -> Result<StateVector, EngineError> {
    if num_qubits == 0 {
        return Err(EngineError::NoQubits);
    }
    let requested = state_bytes(num_qubits, precision);
    if let Some(capacity) = capacity {
        if requested > capacity {
            return Err(EngineError::CapacityExceeded { requested, capacity });
        }
    }
    if num_qubits >= usize::BITS as usize - 1 {
        return Err(EngineError::AllocationFailed { requested });
    }
    let len = 1usize << num_qubits;
    let amps = match precision {
        Precision::Single => Amplitudes::Single(zero_state::<f32>(len, requested)?),
        Precision::Double => Amplitudes::Double(zero_state::<f64>(len, requested)?),
    };
    Ok(StateVector::from_amplitudes(num_qubits, amps))
}

fn zero_state<T: Real>(len: usize, requested: u64) -> Result<Vec<Complex<T>>, EngineError> {
    let mut v = Vec::new();
    v.try_reserve_exact(len)
        .map_err(|_| EngineError::AllocationFailed { requested })?;
    v.resize(len, Complex::new(T::zero(), T::zero()));
    v[0] = Complex::new(T::one(), T::zero());
    Ok(v)
}

/// Strategy for walking the amplitude array; engines implement this and get
/// gate validation and precision dispatch from [`apply_with`].
pub(crate) trait Walker {
    fn walk<T: Real>(&self, amps: &mut [Complex<T>], num_qubits: usize, kernel: &GateKernel<T>);
}

pub(crate) fn apply_with<W: Walker>(walker: &W, state: &mut StateVector, op: &GateOp) -> Result<(), EngineError> {
    let n = state.num_qubits();
    if let Some(&target) = op.targets.iter().find(|&&t| t >= n) {
        return Err(EngineError::TargetOutOfRange {
            gate_index: None,
            target,
            num_qubits: n,
        });
    }
    if let Some(v) = op.violations(n).first() {
        return Err(EngineError::InvalidGate(format!("{v:?}")));
    }
    let matrix = op.effective_unitary();
    match state.amplitudes_mut() {
        Amplitudes::Single(v) => {
            let k = GateKernel::<f32>::new(&matrix, &op.targets);
            walker.walk::<f32>(v, n, &k);
        }
        Amplitudes::Double(v) => {
            let k = GateKernel::<f64>::new(&matrix, &op.targets);
            walker.walk::<f64>(v, n, &k);
        }
    }
    Ok(())
}

/// Allocates `|0...0>` on `engine` and applies every gate in order.
pub fn run_circuit(engine: &dyn Engine, circuit: &Circuit, precision: Precision) -> Result<StateVector, EngineError> {
    let mut state = engine.init_state(circuit.num_qubits, precision)?;
    for (i, op) in circuit.gates.iter().enumerate() {
        engine.apply_gate(&mut state, op).map_err(|e| e.at_gate(i))?;
    }
    engine.synchronize();
    Ok(state)
}

/// `|<a|b>|^2`, computed in double precision.
pub fn state_fidelity(a: &StateVector, b: &StateVector) -> Result<f64, EngineError> {
    if a.num_qubits() != b.num_qubits() {
        return Err(EngineError::DimensionMismatch(a.num_qubits(), b.num_qubits()));
    }
    let inner = match (a.amplitudes(), b.amplitudes()) {
        (Amplitudes::Double(x), Amplitudes::Double(y)) => x.iter().zip(y).map(|(p, q)| p.conj() * q).sum(),
        _ => (0..a.len())
            .map(|k| a.amplitude(k).conj() * b.amplitude(k))
            .sum::<Complex64>(),
    };
    Ok(inner.norm_sqr().min(1.0))
}

/// Converts a state to another precision (used by tests and reports).
pub fn convert_precision(state: &StateVector, precision: Precision) -> StateVector {
    let n = state.num_qubits();
    match precision {
        Precision::Double => StateVector::from_double(n, state.to_double()),
        Precision::Single => StateVector::from_amplitudes(
            n,
            Amplitudes::Single(
                state
                    .to_double()
                    .iter()
                    .map(|z| Complex32::new(z.re as f32, z.im as f32))
                    .collect(),
            ),
        ),
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RegistryError {
    #[error("engine name {0:?} is already registered")]
    Duplicate(String),
    #[error("unknown engine {0:?}")]
    Unknown(String),
}

/// The set of engines known to a process. Read-only once built.
#[derive(Clone)]
pub struct EngineRegistry {
    engines: Vec<Arc<dyn Engine>>,
}

impl EngineRegistry {
    pub fn empty() -> Self {
        Self { engines: Vec::new() }
    }

    /// Reference and parallel engines with unbounded capacity.
    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(ReferenceEngine::new())).unwrap();
        r.register(Arc::new(ParallelEngine::new())).unwrap();
        r
    }

    pub fn register(&mut self, engine: Arc<dyn Engine>) -> Result<(), RegistryError> {
        let name = engine.name();
        if self.engines.iter().any(|e| e.name() == name) {
            return Err(RegistryError::Duplicate(name));
        }
        self.engines.push(engine);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Engine>, RegistryError> {
        self.engines
            .iter()
            .find(|e| e.name() == name)
            .cloned()
            .ok_or_else(|| RegistryError::Unknown(name.to_string()))
    }

    pub fn engines(&self) -> &[Arc<dyn Engine>] {
        &self.engines
    }

    pub fn names(&self) -> Vec<String> {
        self.engines.iter().map(|e| e.name()).collect()
    }
}

impl fmt::Debug for EngineRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateKind;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn engines() -> Vec<Box<dyn Engine>> {
        vec![Box::new(ReferenceEngine::new()), Box::new(ParallelEngine::new())]
    }

    fn assert_amps(state: &StateVector, expected: &[Complex64], tol: f64) {
        assert_eq!(state.len(), expected.len());
        for (k, e) in expected.iter().enumerate() {
            assert!((state.amplitude(k) - e).norm() <= tol, "amp {k}: {} vs {e}", state.amplitude(k));
        }
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn init_state_double_and_single() {
        for e in engines() {
            let s = e.init_state(2, Precision::Double).unwrap();
            assert_amps(&s, &[c(1.), c(0.), c(0.), c(0.)], 0.0);
            let s = e.init_state(1, Precision::Single).unwrap();
            assert_eq!(s.precision(), Precision::Single);
            assert_amps(&s, &[c(1.), c(0.)], 0.0);
        }
    }

    #[test]
    fn init_state_over_capacity_reports_requested_bytes() {
        // 16 GiB device minus the default 512 MiB reserve.
        let usable = (16u64 << 30) - (512 << 20);
        let engine = ReferenceEngine::with_capacity(usable);
        let err = engine.init_state(30, Precision::Double).unwrap_err();
        assert_eq!(err.requested_bytes(), Some(17_179_869_184));
        assert_eq!(
            err,
            EngineError::CapacityExceeded {
                requested: 17_179_869_184,
                capacity: usable
            }
        );
    }

    #[test]
    fn hadamard_then_cnot_gives_bell_state() {
        for e in engines() {
            let mut s = e.init_state(2, Precision::Double).unwrap();
            e.apply_gate(&mut s, &GateOp::h(0)).unwrap();
            assert_amps(&s, &[c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2), c(0.), c(0.)], 1e-15);
            e.apply_gate(&mut s, &GateOp::cnot(0, 1)).unwrap();
            assert_amps(&s, &[c(FRAC_1_SQRT_2), c(0.), c(0.), c(FRAC_1_SQRT_2)], 1e-15);
        }
    }

    #[test]
    fn x_on_qubit_one_sets_index_two() {
        for e in engines() {
            let mut s = e.init_state(2, Precision::Double).unwrap();
            e.apply_gate(&mut s, &GateOp::x(1)).unwrap();
            assert_amps(&s, &[c(0.), c(0.), c(1.), c(0.)], 0.0);
        }
    }

    #[test]
    fn x_on_qubit_t_sets_index_two_to_the_t() {
        for e in engines() {
            for t in 0..5 {
                let mut s = e.init_state(5, Precision::Double).unwrap();
                e.apply_gate(&mut s, &GateOp::x(t)).unwrap();
                assert_eq!(s.amplitude(1 << t), c(1.0));
            }
        }
    }

    #[test]
    fn ghz5_circuit() {
        let mut circ = Circuit::new(5);
        circ.push(GateOp::h(0));
        for q in 0..4 {
            circ.push(GateOp::cnot(q, q + 1));
        }
        for e in engines() {
            let s = run_circuit(e.as_ref(), &circ, Precision::Double).unwrap();
            let mut expected = vec![c(0.); 32];
            expected[0] = c(FRAC_1_SQRT_2);
            expected[31] = c(FRAC_1_SQRT_2);
            assert_amps(&s, &expected, 1e-15);
        }
    }

    #[test]
    fn empty_circuit_leaves_ground_state() {
        let circ = Circuit::new(3);
        for e in engines() {
            let s = run_circuit(e.as_ref(), &circ, Precision::Double).unwrap();
            let mut expected = vec![c(0.); 8];
            expected[0] = c(1.);
            assert_amps(&s, &expected, 0.0);
        }
    }

    #[test]
    fn out_of_range_target_is_an_error() {
        let mut circ = Circuit::new(2);
        circ.push(GateOp::h(0)).push(GateOp::new(GateKind::X, [5]));
        for e in engines() {
            let err = run_circuit(e.as_ref(), &circ, Precision::Double).unwrap_err();
            assert_eq!(
                err,
                EngineError::TargetOutOfRange {
                    gate_index: Some(1),
                    target: 5,
                    num_qubits: 2
                }
            );
        }
    }

    #[test]
    fn fidelity_basics() {
        let e = ReferenceEngine::new();
        let zero = e.init_state(1, Precision::Double).unwrap();
        let mut one = zero.clone();
        e.apply_gate(&mut one, &GateOp::x(0)).unwrap();
        assert_eq!(state_fidelity(&zero, &zero).unwrap(), 1.0);
        assert_eq!(state_fidelity(&zero, &one).unwrap(), 0.0);
        let single = convert_precision(&one, Precision::Single);
        assert_eq!(state_fidelity(&single, &one).unwrap(), 1.0);
        let two = e.init_state(2, Precision::Double).unwrap();
        assert_eq!(state_fidelity(&zero, &two), Err(EngineError::DimensionMismatch(1, 2)));
    }

    #[test]
    fn registry_rejects_duplicates() {
        let mut r = EngineRegistry::standard();
        assert_eq!(r.names(), vec![REFERENCE, PARALLEL]);
        assert_eq!(
            r.register(Arc::new(ReferenceEngine::new())),
            Err(RegistryError::Duplicate(REFERENCE.into()))
        );
        assert!(r.get("gpu").is_err());
    }
}
