//! Amplitude update kernels shared by all engines.
//!
//! Every engine computes each output amplitude with the same expression in
//! the same operation order, so engines differ only in how they walk the
//! index space. That makes their outputs bit-identical, which the fallback
//! path relies on.

use num_complex::Complex;
use num_traits::Float;

use crate::matrix::Matrix;

pub trait Real: Float + Send + Sync + 'static {
    fn from_f64(v: f64) -> Self;
}

impl Real for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
}

/// A gate matrix lowered to the working precision, with the amplitude
/// offsets of each local basis state precomputed.
pub struct GateKernel<T> {
    pub dim: usize,
    pub matrix: Vec<Complex<T>>,
    /// `offsets[l] = sum_j bit_j(l) << targets[j]`
    pub offsets: Vec<usize>,
    /// Targets in ascending order, for zero-bit insertion.
    pub sorted_targets: Vec<usize>,
}

impl<T: Real> GateKernel<T> {
    pub fn new(matrix: &Matrix, targets: &[usize]) -> Self {
        let dim = matrix.dim();
        debug_assert_eq!(dim, 1 << targets.len());
        let matrix = matrix
            .as_slice()
            .iter()
            .map(|z| Complex::new(T::from_f64(z.re), T::from_f64(z.im)))
            .collect();
        let offsets = (0..dim)
            .map(|l| {
                targets
                    .iter()
                    .enumerate()
                    .map(|(j, &t)| ((l >> j) & 1) << t)
                    .sum()
            })
            .collect();
        let mut sorted_targets = targets.to_vec();
        sorted_targets.sort_unstable();
        Self {
            dim,
            matrix,
            offsets,
            sorted_targets,
        }
    }

    pub fn arity(&self) -> usize {
        self.sorted_targets.len()
    }

    /// Number of independent amplitude groups in a `2^n` state.
    pub fn group_count(&self, num_qubits: usize) -> usize {
        1usize << (num_qubits - self.arity())
    }

    /// First amplitude index of group `g`: `g` with a zero bit inserted at
    /// every target position.
    #[inline]
    pub fn group_base(&self, g: usize) -> usize {
        let mut base = g;
        for &t in &self.sorted_targets {
            let low = base & ((1usize << t) - 1);
            base = ((base >> t) << (t + 1)) | low;
        }
        base
    }

    #[inline]
    pub fn single_qubit_entries(&self) -> [Complex<T>; 4] {
        [self.matrix[0], self.matrix[1], self.matrix[2], self.matrix[3]]
    }
}

/// The two-amplitude update of a single-qubit gate.
#[inline(always)]
pub fn butterfly<T: Real>(m: &[Complex<T>; 4], a0: Complex<T>, a1: Complex<T>) -> (Complex<T>, Complex<T>) {
    (m[0] * a0 + m[1] * a1, m[2] * a0 + m[3] * a1)
}

/// Applies `m` to paired slices where `lo[i]` has the target bit clear and
/// `hi[i]` is its partner with the bit set.
#[inline]
pub fn butterfly_slices<T: Real>(m: &[Complex<T>; 4], lo: &mut [Complex<T>], hi: &mut [Complex<T>]) {
    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
        let (x, y) = butterfly(m, *a, *b);
        *a = x;
        *b = y;
    }
}

/// `out = M * gathered` for one amplitude group.
#[inline]
pub fn mat_vec<T: Real>(matrix: &[Complex<T>], dim: usize, input: &[Complex<T>], out: &mut [Complex<T>]) {
    for r in 0..dim {
        let row = &matrix[r * dim..(r + 1) * dim];
        let mut acc = row[0] * input[0];
        for c in 1..dim {
            acc = acc + row[c] * input[c];
        }
        out[r] = acc;
    }
}

/// Gather, multiply, scatter for the group starting at `base`.
///
/// # Safety
///
/// `amps` must be valid for reads and writes at `base + offsets[l]` for every
/// `l`, and no other thread may touch those indices concurrently.
#[inline]
pub unsafe fn apply_group_raw<T: Real>(
    kernel: &GateKernel<T>,
    amps: *mut Complex<T>,
    base: usize,
    gathered: &mut [Complex<T>],
    out: &mut [Complex<T>],
) {
    for (g, off) in gathered.iter_mut().zip(&kernel.offsets) {
        *g = *amps.add(base + off);
    }
    mat_vec(&kernel.matrix, kernel.dim, gathered, out);
    for (o, off) in out.iter().zip(&kernel.offsets) {
        *amps.add(base + off) = *o;
    }
}

/// Safe single-threaded wrapper around [`apply_group_raw`].
#[inline]
pub fn apply_group<T: Real>(
    kernel: &GateKernel<T>,
    amps: &mut [Complex<T>],
    base: usize,
    gathered: &mut [Complex<T>],
    out: &mut [Complex<T>],
) {
    let last = base + kernel.offsets[kernel.dim - 1];
    assert!(last < amps.len(), "gate group out of bounds");
    // SAFETY: every offset is a sub-sum of offsets[dim - 1], so every index
    // touched is <= last, which was bounds-checked; we hold `&mut amps`.
    unsafe { apply_group_raw(kernel, amps.as_mut_ptr(), base, gathered, out) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{gate_matrix, GateKind};

    #[test]
    fn group_base_inserts_zero_bits() {
        let m = gate_matrix(GateKind::CNOT, &[]).unwrap();
        let k: GateKernel<f64> = GateKernel::new(&m, &[3, 1]);
        assert_eq!(k.sorted_targets, vec![1, 3]);
        // g = 0b111 -> bits go to positions 0, 2, 4 -> 0b10101
        assert_eq!(k.group_base(0b111), 0b10101);
        assert_eq!(k.offsets, vec![0, 8, 2, 10]);
        let bases: Vec<usize> = (0..k.group_count(4)).map(|g| k.group_base(g)).collect();
        assert_eq!(bases, vec![0, 1, 4, 5]);
    }
}
