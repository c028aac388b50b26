use num_complex::Complex;

use super::kernel::{apply_group, butterfly, GateKernel, Real};
use super::{apply_with, Engine, EngineError, EngineId, StateVector, Walker, REFERENCE};
use crate::circuit::GateOp;

/// Sequential loops over the amplitude array. Serves as the correctness
/// baseline and as the destination of every memory fallback.
#[derive(Debug, Clone, Default)]
pub struct ReferenceEngine {
    capacity: Option<u64>,
}

impl ReferenceEngine {
    pub fn new() -> Self {
        Self { capacity: None }
    }

    pub fn with_capacity(bytes: u64) -> Self {
        Self { capacity: Some(bytes) }
    }
}

impl Walker for ReferenceEngine {
    fn walk<T: Real>(&self, amps: &mut [Complex<T>], num_qubits: usize, kernel: &GateKernel<T>) {
        if kernel.arity() == 1 {
            let m = kernel.single_qubit_entries();
            let bit = 1usize << kernel.sorted_targets[0];
            for k in 0..amps.len() {
                if k & bit == 0 {
                    let (a, b) = butterfly(&m, amps[k], amps[k | bit]);
                    amps[k] = a;
                    amps[k | bit] = b;
                }
            }
            return;
        }
        let zero = Complex::new(T::zero(), T::zero());
        let mut gathered = vec![zero; kernel.dim];
        let mut out = vec![zero; kernel.dim];
        for g in 0..kernel.group_count(num_qubits) {
            let base = kernel.group_base(g);
            apply_group(kernel, amps, base, &mut gathered, &mut out);
        }
    }
}

impl Engine for ReferenceEngine {
    fn id(&self) -> EngineId {
        EngineId::new(REFERENCE)
    }

    fn capacity_bytes(&self) -> Option<u64> {
        self.capacity
    }

    fn apply_gate(&self, state: &mut StateVector, op: &GateOp) -> Result<(), EngineError> {
        apply_with(self, state, op)
    }
}
