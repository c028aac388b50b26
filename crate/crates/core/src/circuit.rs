//! Circuit intermediate representation.
//!
//! Conventions used everywhere in the crate:
//!
//! * Amplitude index `k` is little-endian: bit `t` of `k` is qubit `t`.
//! * Inside a multi-qubit gate matrix, local basis bit `j` corresponds to
//!   `targets[j]`. Controlled gates list their controls first, so for
//!   `CNOT` `targets[0]` is the control and `targets[1]` the target, and for
//!   `TOFFOLI` `targets[0..2]` are the controls.
//! * Angles are radians.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;

use thiserror::Error;

use crate::matrix::{Matrix, C64};

/// Tolerance for accepting a user-supplied unitary.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Single,
    Double,
}

impl Precision {
    /// Machine epsilon used by the precision controller. Fixed values, not
    /// queried from the platform.
    pub const fn epsilon_mach(self) -> f64 {
        match self {
            Precision::Single => 1.19e-7,
            Precision::Double => 2.22e-16,
        }
    }

    /// Bytes per complex amplitude.
    pub const fn amplitude_bytes(self) -> u64 {
        match self {
            Precision::Single => 8,
            Precision::Double => 16,
        }
    }

    /// Norm drift tolerated after a gate sequence.
    pub const fn norm_tolerance(self) -> f64 {
        match self {
            Precision::Single => 1e-6,
            Precision::Double => 1e-10,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::Single => "single",
            Precision::Double => "double",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    I,
    X,
    Y,
    Z,
    H,
    S,
    T,
    RX,
    RY,
    RZ,
    CNOT,
    CZ,
    SWAP,
    TOFFOLI,
    U3,
    Custom,
}

impl GateKind {
    pub const NAMED: [GateKind; 15] = [
        GateKind::I,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::S,
        GateKind::T,
        GateKind::RX,
        GateKind::RY,
        GateKind::RZ,
        GateKind::CNOT,
        GateKind::CZ,
        GateKind::SWAP,
        GateKind::TOFFOLI,
        GateKind::U3,
    ];

    /// Qubit count for named kinds; `None` for `Custom`, whose arity comes
    /// from its matrix.
    pub const fn arity(self) -> Option<usize> {
        use GateKind::*;
        match self {
            I | X | Y | Z | H | S | T | RX | RY | RZ | U3 => Some(1),
            CNOT | CZ | SWAP => Some(2),
            TOFFOLI => Some(3),
            Custom => None,
        }
    }

    pub const fn param_count(self) -> usize {
        use GateKind::*;
        match self {
            RX | RY | RZ => 1,
            U3 => 3,
            _ => 0,
        }
    }

    /// Lower-case name used by the text and JSON formats.
    pub const fn name(self) -> &'static str {
        use GateKind::*;
        match self {
            I => "id",
            X => "x",
            Y => "y",
            Z => "z",
            H => "h",
            S => "s",
            T => "t",
            RX => "rx",
            RY => "ry",
            RZ => "rz",
            CNOT => "cx",
            CZ => "cz",
            SWAP => "swap",
            TOFFOLI => "ccx",
            U3 => "u3",
            Custom => "unitary",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        use GateKind::*;
        Some(match name {
            "id" => I,
            "x" => X,
            "y" => Y,
            "z" => Z,
            "h" => H,
            "s" => S,
            "t" => T,
            "rx" => RX,
            "ry" => RY,
            "rz" => RZ,
            "u3" => U3,
            "cx" => CNOT,
            "cz" => CZ,
            "swap" => SWAP,
            "ccx" => TOFFOLI,
            "unitary" => Custom,
            _ => return None,
        })
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("{kind} expects {expected} parameter(s), got {got}")]
    ParamCount {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("custom gates carry their own matrix")]
    CustomWithoutMatrix,
}

/// Canonical matrix of a named gate in the local-ordering convention.
pub fn gate_matrix(kind: GateKind, params: &[f64]) -> Result<Matrix, GateError> {
    use GateKind::*;
    if kind == Custom {
        return Err(GateError::CustomWithoutMatrix);
    }
    if params.len() != kind.param_count() {
        return Err(GateError::ParamCount {
            kind,
            expected: kind.param_count(),
            got: params.len(),
        });
    }
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let m = match kind {
        I => Matrix::identity(2),
        X => Matrix::from_rows([[zero, one], [one, zero]]),
        Y => Matrix::from_rows([[zero, -i], [i, zero]]),
        Z => Matrix::diagonal(&[one, -one]),
        H => {
            let h = C64::new(FRAC_1_SQRT_2, 0.0);
            Matrix::from_rows([[h, h], [h, -h]])
        }
        S => Matrix::diagonal(&[one, i]),
        T => Matrix::diagonal(&[one, C64::from_polar(1.0, FRAC_PI_4)]),
        RX => {
            let (s, c) = (params[0] / 2.0).sin_cos();
            Matrix::from_rows([
                [C64::new(c, 0.0), C64::new(0.0, -s)],
                [C64::new(0.0, -s), C64::new(c, 0.0)],
            ])
        }
        RY => {
            let (s, c) = (params[0] / 2.0).sin_cos();
            Matrix::from_rows([
                [C64::new(c, 0.0), C64::new(-s, 0.0)],
                [C64::new(s, 0.0), C64::new(c, 0.0)],
            ])
        }
        RZ => {
            let half = params[0] / 2.0;
            Matrix::diagonal(&[C64::from_polar(1.0, -half), C64::from_polar(1.0, half)])
        }
        U3 => {
            let (theta, phi, lambda) = (params[0], params[1], params[2]);
            let (s, c) = (theta / 2.0).sin_cos();
            Matrix::from_rows([
                [C64::new(c, 0.0), -C64::from_polar(s, lambda)],
                [C64::from_polar(s, phi), C64::from_polar(c, phi + lambda)],
            ])
        }
        // Local index = control + 2 * target.
        CNOT => Matrix::permutation(&[0, 3, 2, 1]),
        CZ => Matrix::diagonal(&[one, one, one, -one]),
        SWAP => Matrix::permutation(&[0, 2, 1, 3]),
        // Controls on local bits 0 and 1, target on bit 2.
        TOFFOLI => Matrix::permutation(&[0, 1, 2, 7, 4, 5, 6, 3]),
        Custom => unreachable!(),
    };
    Ok(m)
}

/// One gate application.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    pub params: Vec<f64>,
    pub targets: Vec<usize>,
    /// Present iff `kind == Custom`.
    pub matrix: Option<Matrix>,
}

impl GateOp {
    /// A fixed (parameter-free) named gate.
    pub fn new(kind: GateKind, targets: impl Into<Vec<usize>>) -> Self {
        Self::with_params(kind, Vec::new(), targets)
    }

    pub fn with_params(kind: GateKind, params: Vec<f64>, targets: impl Into<Vec<usize>>) -> Self {
        Self {
            kind,
            params,
            targets: targets.into(),
            matrix: None,
        }
    }

    pub fn custom(matrix: Matrix, targets: impl Into<Vec<usize>>) -> Self {
        Self {
            kind: GateKind::Custom,
            params: Vec::new(),
            targets: targets.into(),
            matrix: Some(matrix),
        }
    }

    pub fn h(q: usize) -> Self {
        Self::new(GateKind::H, [q])
    }

    pub fn x(q: usize) -> Self {
        Self::new(GateKind::X, [q])
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::new(GateKind::CNOT, [control, target])
    }

    pub fn rz(theta: f64, q: usize) -> Self {
        Self::with_params(GateKind::RZ, vec![theta], [q])
    }

    pub fn ry(theta: f64, q: usize) -> Self {
        Self::with_params(GateKind::RY, vec![theta], [q])
    }

    pub fn u3(theta: f64, phi: f64, lambda: f64, q: usize) -> Self {
        Self::with_params(GateKind::U3, vec![theta, phi, lambda], [q])
    }

    pub fn arity(&self) -> usize {
        self.targets.len()
    }

    /// The unitary this gate applies, in local-ordering convention.
    ///
    /// Panics on an op that fails validation (wrong parameter count or a
    /// custom gate without a matrix).
    pub fn effective_unitary(&self) -> Matrix {
        match &self.matrix {
            Some(m) => m.clone(),
            None => gate_matrix(self.kind, &self.params).expect("effective_unitary on invalid gate"),
        }
    }

    /// Checks this op in isolation against a register of `num_qubits`.
    pub fn violations(&self, num_qubits: usize) -> Vec<ViolationKind> {
        let mut out = Vec::new();
        if self.targets.is_empty() {
            out.push(ViolationKind::NoTargets);
        }
        for (j, &t) in self.targets.iter().enumerate() {
            if t >= num_qubits {
                out.push(ViolationKind::TargetOutOfRange { target: t, num_qubits });
            }
            if self.targets[..j].contains(&t) {
                out.push(ViolationKind::DuplicateTarget { target: t });
            }
        }
        match self.kind {
            GateKind::Custom => match &self.matrix {
                None => out.push(ViolationKind::MissingMatrix),
                Some(m) => {
                    if m.dim() != 1usize << self.targets.len().min(30) {
                        out.push(ViolationKind::MatrixDimension {
                            dim: m.dim(),
                            arity: self.targets.len(),
                        });
                    } else if !m.is_finite() || m.unitarity_error() > UNITARITY_TOLERANCE {
                        out.push(ViolationKind::NonUnitary);
                    }
                }
            },
            kind => {
                if self.matrix.is_some() {
                    out.push(ViolationKind::UnexpectedMatrix);
                }
                let arity = kind.arity().unwrap_or(0);
                if self.targets.len() != arity {
                    out.push(ViolationKind::Arity {
                        expected: arity,
                        got: self.targets.len(),
                    });
                }
                if self.params.len() != kind.param_count() {
                    out.push(ViolationKind::ParamCount {
                        expected: kind.param_count(),
                        got: self.params.len(),
                    });
                } else if self.params.iter().any(|p| !p.is_finite()) {
                    out.push(ViolationKind::NonFiniteParam);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    NoTargets,
    TargetOutOfRange { target: usize, num_qubits: usize },
    DuplicateTarget { target: usize },
    Arity { expected: usize, got: usize },
    ParamCount { expected: usize, got: usize },
    NonFiniteParam,
    MissingMatrix,
    UnexpectedMatrix,
    MatrixDimension { dim: usize, arity: usize },
    NonUnitary,
    NoQubits,
}

/// An invariant violation found by [`Circuit::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// `None` for circuit-level violations.
    pub gate_index: Option<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ViolationKind::*;
        match self {
            NoTargets => write!(f, "gate has no targets"),
            TargetOutOfRange { target, num_qubits } => {
                write!(f, "target {target} out of range for {num_qubits} qubit(s)")
            }
            DuplicateTarget { .. } => write!(f, "duplicate target"),
            Arity { expected, got } => write!(f, "expected {expected} target(s), got {got}"),
            ParamCount { expected, got } => write!(f, "expected {expected} parameter(s), got {got}"),
            NonFiniteParam => write!(f, "non-finite parameter"),
            MissingMatrix => write!(f, "custom gate without matrix"),
            UnexpectedMatrix => write!(f, "named gate carries a matrix"),
            MatrixDimension { dim, arity } => {
                write!(f, "matrix dimension {dim} does not match {arity} target(s)")
            }
            NonUnitary => write!(f, "non-unitary"),
            NoQubits => write!(f, "circuit has no qubits"),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(i) = self.gate_index {
            write!(f, " at gate {i}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<GateOp>,
    pub name: String,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            gates: Vec::new(),
            name: String::new(),
        }
    }

    pub fn named(num_qubits: usize, name: impl Into<String>) -> Self {
        Self {
            num_qubits,
            gates: Vec::new(),
            name: name.into(),
        }
    }

    pub fn push(&mut self, op: GateOp) -> &mut Self {
        self.gates.push(op);
        self
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Widest gate in the circuit (0 for an empty circuit).
    pub fn max_gate_width(&self) -> usize {
        self.gates.iter().map(GateOp::arity).max().unwrap_or(0)
    }

    /// All invariant violations, in gate order. Empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.num_qubits == 0 {
            out.push(Violation {
                gate_index: None,
                kind: ViolationKind::NoQubits,
            });
        }
        for (i, op) in self.gates.iter().enumerate() {
            out.extend(op.violations(self.num_qubits).into_iter().map(|kind| Violation {
                gate_index: Some(i),
                kind,
            }));
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }
}
