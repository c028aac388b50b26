//! Single versus double precision choice from an accumulated rounding bound.

use serde::Serialize;

use crate::circuit::Precision;

pub const DEFAULT_PRECISION_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrecisionDecision {
    pub chosen: Precision,
    /// `g * 2^n * eps_single`.
    pub estimated_error_single: f64,
    pub tolerance: f64,
    pub rationale: String,
}

/// Worst-case accumulated rounding error `g * 2^n * eps_mach`.
pub fn rounding_bound(num_qubits: usize, gate_count: usize, precision: Precision) -> f64 {
    gate_count as f64 * (num_qubits as f64).exp2() * precision.epsilon_mach()
}

/// Chooses single precision iff its rounding bound stays within `tolerance`.
/// The decision applies to the whole run.
pub fn select_precision(num_qubits: usize, gate_count: usize, tolerance: f64) -> PrecisionDecision {
    let est = rounding_bound(num_qubits, gate_count, Precision::Single);
    let (chosen, cmp) = if est <= tolerance {
        (Precision::Single, "<=")
    } else {
        (Precision::Double, ">")
    };
    PrecisionDecision {
        chosen,
        estimated_error_single: est,
        tolerance,
        rationale: format!(
            "single-precision bound {est:.3e} ({gate_count} gates, {num_qubits} qubits) {cmp} tolerance {tolerance:.1e}; using {chosen}"
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deep_circuit_needs_double() {
        let d = select_precision(20, 200, 1e-4);
        assert_eq!(d.chosen, Precision::Double);
        // 200 * 2^20 * 1.19e-7
        assert!((d.estimated_error_single - 24.956_108_8).abs() < 1e-6);
        assert!((d.estimated_error_single / 25.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn shallow_circuit_allows_single() {
        let d = select_precision(16, 49, 1.0);
        assert_eq!(d.chosen, Precision::Single);
        assert!((d.estimated_error_single - 0.382_140_416).abs() < 1e-6);
    }

    #[test]
    fn empty_circuit_is_single() {
        let d = select_precision(30, 0, 1e-12);
        assert_eq!(d.chosen, Precision::Single);
        assert_eq!(d.estimated_error_single, 0.0);
    }

    #[test]
    fn boundary_is_inclusive() {
        let est = rounding_bound(3, 10, Precision::Single);
        assert_eq!(select_precision(3, 10, est).chosen, Precision::Single);
    }

    #[test]
    fn no_overflow_at_63_qubits() {
        assert!(rounding_bound(63, usize::MAX, Precision::Single).is_finite());
    }
}
