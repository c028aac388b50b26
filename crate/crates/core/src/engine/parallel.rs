use num_complex::Complex;
use rayon::prelude::*;

use super::kernel::{apply_group_raw, butterfly, butterfly_slices, GateKernel, Real};
use super::{apply_with, Engine, EngineError, EngineId, StateVector, Walker, PARALLEL};
use crate::circuit::GateOp;

/// Smallest unit of work handed to a worker, in amplitudes.
pub const MIN_CHUNK_AMPLITUDES: usize = 1 << 14;

/// Chunked data-parallel kernel over the amplitude array.
///
/// Single-qubit gates walk contiguous `2^(t+1)` blocks, pairing the low and
/// high halves without per-index bit tests. Wider gates split the group index
/// space into chunks of at least [`MIN_CHUNK_AMPLITUDES`] amplitudes.
#[derive(Debug, Clone, Default)]
pub struct ParallelEngine {
    capacity: Option<u64>,
}

impl ParallelEngine {
    pub fn new() -> Self {
        Self { capacity: None }
    }

    pub fn with_capacity(bytes: u64) -> Self {
        Self { capacity: Some(bytes) }
    }
}

#[derive(Clone, Copy)]
struct SharedAmps<T>(*mut Complex<T>);

// SAFETY: workers only write disjoint amplitude groups (see `walk`).
unsafe impl<T: Send> Send for SharedAmps<T> {}
unsafe impl<T: Send> Sync for SharedAmps<T> {}

impl<T> SharedAmps<T> {
    fn ptr(self) -> *mut Complex<T> {
        self.0
    }
}

fn serial_blocks<T: Real>(amps: &mut [Complex<T>], half: usize, m: &[Complex<T>; 4]) {
    if half == 1 {
        // Tiny blocks: the slice split per block would dominate.
        for pair in amps.chunks_exact_mut(2) {
            let (a, b) = butterfly(m, pair[0], pair[1]);
            pair[0] = a;
            pair[1] = b;
        }
        return;
    }
    if half == 2 {
        for quad in amps.chunks_exact_mut(4) {
            let (a, b) = butterfly(m, quad[0], quad[2]);
            let (c, d) = butterfly(m, quad[1], quad[3]);
            quad.copy_from_slice(&[a, c, b, d]);
        }
        return;
    }
    for blk in amps.chunks_exact_mut(half << 1) {
        let (lo, hi) = blk.split_at_mut(half);
        butterfly_slices(m, lo, hi);
    }
}

fn single_qubit<T: Real>(amps: &mut [Complex<T>], target: usize, m: &[Complex<T>; 4]) {
    let half = 1usize << target;
    let block = half << 1;
    if rayon::current_num_threads() == 1 {
        // No one to share with; skip the task splitting.
        serial_blocks(amps, half, m);
    } else if block >= MIN_CHUNK_AMPLITUDES {
        // Few large blocks: parallelise inside each block.
        let piece = MIN_CHUNK_AMPLITUDES / 2;
        for blk in amps.chunks_exact_mut(block) {
            let (lo, hi) = blk.split_at_mut(half);
            lo.par_chunks_mut(piece)
                .zip(hi.par_chunks_mut(piece))
                .for_each(|(l, h)| butterfly_slices(m, l, h));
        }
    } else {
        amps.par_chunks_mut(MIN_CHUNK_AMPLITUDES.min(amps.len())).for_each(|chunk| {
            serial_blocks(chunk, half, m);
        });
    }
}

impl Walker for ParallelEngine {
    fn walk<T: Real>(&self, amps: &mut [Complex<T>], num_qubits: usize, kernel: &GateKernel<T>) {
        if kernel.arity() == 1 {
            single_qubit(amps, kernel.sorted_targets[0], &kernel.single_qubit_entries());
            return;
        }
        let groups = kernel.group_count(num_qubits);
        let groups_per_chunk = (MIN_CHUNK_AMPLITUDES / kernel.dim).max(1);
        let last = kernel.group_base(groups - 1) + kernel.offsets[kernel.dim - 1];
        assert!(last < amps.len(), "gate group out of bounds");
        let shared = SharedAmps(amps.as_mut_ptr());
        let zero = Complex::new(T::zero(), T::zero());
        (0..groups)
            .into_par_iter()
            .with_min_len(groups_per_chunk)
            .for_each_init(
                || (vec![zero; kernel.dim], vec![zero; kernel.dim]),
                |(gathered, out), g| {
                    let base = kernel.group_base(g);
                    // SAFETY: distinct groups address disjoint index sets, and
                    // the largest index (last group, all target bits set) was
                    // bounds-checked above.
                    unsafe { apply_group_raw(kernel, shared.ptr(), base, gathered, out) }
                },
            );
    }
}

impl Engine for ParallelEngine {
    fn id(&self) -> EngineId {
        EngineId::new(PARALLEL)
    }

    fn capacity_bytes(&self) -> Option<u64> {
        self.capacity
    }

    fn apply_gate(&self, state: &mut StateVector, op: &GateOp) -> Result<(), EngineError> {
        apply_with(self, state, op)
    }
}
