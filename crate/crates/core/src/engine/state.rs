use std::fmt;

use num_complex::{Complex32, Complex64};

use crate::circuit::Precision;

/// Dense amplitude storage at either precision.
#[derive(Clone, PartialEq)]
pub enum Amplitudes {
    Single(Vec<Complex32>),
    Double(Vec<Complex64>),
}

impl Amplitudes {
    pub fn len(&self) -> usize {
        match self {
            Amplitudes::Single(v) => v.len(),
            Amplitudes::Double(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `2^n` complex amplitudes; index `k` is little-endian (bit `t` is qubit `t`).
#[derive(Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Amplitudes,
}

impl StateVector {
    /// Wraps raw amplitudes. Panics if the length is not `2^num_qubits`.
    pub fn from_amplitudes(num_qubits: usize, amps: Amplitudes) -> Self {
        assert_eq!(amps.len(), 1usize << num_qubits, "amplitude count must be 2^n");
        Self { num_qubits, amps }
    }

    pub fn from_double(num_qubits: usize, amps: Vec<Complex64>) -> Self {
        Self::from_amplitudes(num_qubits, Amplitudes::Double(amps))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn precision(&self) -> Precision {
        match self.amps {
            Amplitudes::Single(_) => Precision::Single,
            Amplitudes::Double(_) => Precision::Double,
        }
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn size_bytes(&self) -> u64 {
        self.len() as u64 * self.precision().amplitude_bytes()
    }

    pub fn amplitudes(&self) -> &Amplitudes {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut Amplitudes {
        &mut self.amps
    }

    /// Amplitude `k` promoted to double precision.
    pub fn amplitude(&self, k: usize) -> Complex64 {
        match &self.amps {
            Amplitudes::Single(v) => Complex64::new(v[k].re as f64, v[k].im as f64),
            Amplitudes::Double(v) => v[k],
        }
    }

    pub fn to_double(&self) -> Vec<Complex64> {
        match &self.amps {
            Amplitudes::Single(v) => v
                .iter()
                .map(|z| Complex64::new(z.re as f64, z.im as f64))
                .collect(),
            Amplitudes::Double(v) => v.clone(),
        }
    }

    /// `|alpha_k|^2` for every basis state, in double precision.
    pub fn probabilities(&self) -> Vec<f64> {
        match &self.amps {
            Amplitudes::Single(v) => v.iter().map(|z| z.norm_sqr() as f64).collect(),
            Amplitudes::Double(v) => v.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.probabilities().iter().sum()
    }

    /// Largest `|a_k - b_k|`, both promoted to double.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        assert_eq!(self.len(), other.len(), "state dimension mismatch");
        (0..self.len())
            .map(|k| (self.amplitude(k) - other.amplitude(k)).norm())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "StateVector {{ num_qubits: {}, precision: {}",
            self.num_qubits,
            self.precision()
        )?;
        if self.len() <= 16 {
            write!(f, ", amplitudes: {:?}", self.to_double())?;
        }
        write!(f, " }}")
    }
}
