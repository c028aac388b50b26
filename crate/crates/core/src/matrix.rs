//! Small dense complex matrices for gate unitaries.
//!
//! Gate matrices are at most `2^q x 2^q` for a handful of qubits, so a flat
//! row-major `Vec` is all that is needed.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;

pub type C64 = Complex64;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries. Returns `None` unless the
    /// entry count is a perfect square.
    pub fn from_row_major(data: Vec<C64>) -> Option<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() {
            return None;
        }
        Some(Self { dim, data })
    }

    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        Self {
            dim: N,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = *d;
        }
        m
    }

    /// Permutation matrix sending basis state `i` to `perm[i]`.
    pub fn permutation(perm: &[usize]) -> Self {
        let dim = perm.len();
        let mut m = Self::zeros(dim);
        for (col, &row) in perm.iter().enumerate() {
            m.data[row * dim + col] = C64::new(1.0, 0.0);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    /// Number of qubits this matrix acts on, if the dimension is a power of two.
    pub fn num_qubits(&self) -> Option<usize> {
        if self.dim.is_power_of_two() {
            Some(self.dim.trailing_zeros() as usize)
        } else {
            None
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out.data[c * self.dim + r] = self.data[r * self.dim + c].conj();
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |(U^dagger U - I)_ij|`.
    pub fn unitarity_error(&self) -> f64 {
        let product = &self.adjoint() * self;
        product.max_abs_diff(&Matrix::identity(self.dim))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Kronecker product `self (x) rhs`; `rhs` occupies the low index bits.
    pub fn kron(&self, rhs: &Matrix) -> Matrix {
        let dim = self.dim * rhs.dim;
        let mut out = Matrix::zeros(dim);
        for ar in 0..self.dim {
            for ac in 0..self.dim {
                let a = self.get(ar, ac);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for br in 0..rhs.dim {
                    for bc in 0..rhs.dim {
                        out.set(ar * rhs.dim + br, ac * rhs.dim + bc, a * rhs.get(br, bc));
                    }
                }
            }
        }
        out
    }

    /// Lifts a gate matrix over `targets` (local bit `j` is `targets[j]`) onto
    /// the ordered qubit list `space` (local bit `j` is `space[j]`), tensoring
    /// identities on the qubits of `space` the gate does not touch.
    ///
    /// Panics if a target is missing from `space`.
    pub fn embed(&self, targets: &[usize], space: &[usize]) -> Matrix {
        assert_eq!(1usize << targets.len(), self.dim, "matrix does not match target count");
        let positions: Vec<usize> = targets
            .iter()
            .map(|t| {
                space
                    .iter()
                    .position(|s| s == t)
                    .expect("target not contained in embedding space")
            })
            .collect();
        let target_mask: usize = positions.iter().map(|p| 1usize << p).sum();
        let dim = 1usize << space.len();
        let local = |idx: usize| -> usize {
            positions
                .iter()
                .enumerate()
                .map(|(j, &p)| ((idx >> p) & 1) << j)
                .sum()
        };
        let mut out = Matrix::zeros(dim);
        for r in 0..dim {
            let lr = local(r);
            for c in 0..dim {
                if r & !target_mask != c & !target_mask {
                    continue;
                }
                out.set(r, c, self.get(lr, local(c)));
            }
        }
        out
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * rhs.data[k * n + c];
                }
            }
        }
        out
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix({}x{}) [", self.dim, self.dim)?;
        for r in 0..self.dim {
            write!(f, "  ")?;
            for c in 0..self.dim {
                let z = self.get(r, c);
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}
