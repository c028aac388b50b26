//! Dense-matrix oracle and circuit strategies shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use svsim_core::{Circuit, GateKind, GateOp, Matrix};

pub type Dense = Vec<Vec<C>>;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Textbook 2x2 matrices, written out independently of the library.
fn single(kind: GateKind, p: &[f64]) -> [[C; 2]; 2] {
    let s2 = 1.0 / 2f64.sqrt();
    match kind {
        GateKind::I => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
        GateKind::X => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        GateKind::Y => [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
        GateKind::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
        GateKind::H => [[c(s2, 0.0), c(s2, 0.0)], [c(s2, 0.0), c(-s2, 0.0)]],
        GateKind::S => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]],
        GateKind::T => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), C::cis(PI / 4.0)]],
        GateKind::RX => {
            let (a, b) = ((p[0] / 2.0).cos(), (p[0] / 2.0).sin());
            [[c(a, 0.0), c(0.0, -b)], [c(0.0, -b), c(a, 0.0)]]
        }
        GateKind::RY => {
            let (a, b) = ((p[0] / 2.0).cos(), (p[0] / 2.0).sin());
            [[c(a, 0.0), c(-b, 0.0)], [c(b, 0.0), c(a, 0.0)]]
        }
        GateKind::RZ => [[C::cis(-p[0] / 2.0), c(0.0, 0.0)], [c(0.0, 0.0), C::cis(p[0] / 2.0)]],
        GateKind::U3 => {
            let (a, b) = ((p[0] / 2.0).cos(), (p[0] / 2.0).sin());
            [
                [c(a, 0.0), -C::cis(p[2]) * b],
                [C::cis(p[1]) * b, C::cis(p[1] + p[2]) * a],
            ]
        }
        other => panic!("{other:?} is not a single-qubit gate"),
    }
}

fn bit(k: usize, q: usize) -> usize {
    (k >> q) & 1
}

/// Full `2^n x 2^n` operator of one gate.
pub fn dense_gate(op: &GateOp, n: usize) -> Dense {
    let dim = 1usize << n;
    let mut m = vec![vec![c(0.0, 0.0); dim]; dim];
    let t = &op.targets;
    match op.kind {
        GateKind::CNOT => (0..dim).for_each(|col| m[col ^ (bit(col, t[0]) << t[1])][col] = c(1.0, 0.0)),
        GateKind::TOFFOLI => (0..dim).for_each(|col| {
            m[col ^ ((bit(col, t[0]) & bit(col, t[1])) << t[2])][col] = c(1.0, 0.0)
        }),
        GateKind::CZ => (0..dim).for_each(|col| {
            m[col][col] = c(if bit(col, t[0]) & bit(col, t[1]) == 1 { -1.0 } else { 1.0 }, 0.0)
        }),
        GateKind::SWAP => (0..dim).for_each(|col| {
            let (a, b) = (bit(col, t[0]), bit(col, t[1]));
            let row = col & !(1 << t[0]) & !(1 << t[1]) | (b << t[0]) | (a << t[1]);
            m[row][col] = c(1.0, 0.0);
        }),
        GateKind::Custom => {
            let u = op.matrix.as_ref().unwrap();
            let mask: usize = t.iter().map(|q| 1 << q).sum();
            let local = |k: usize| t.iter().enumerate().map(|(j, &q)| bit(k, q) << j).sum::<usize>();
            for r in 0..dim {
                for col in 0..dim {
                    if r & !mask == col & !mask {
                        m[r][col] = u.get(local(r), local(col));
                    }
                }
            }
        }
        kind => {
            let u = single(kind, &op.params);
            let q = t[0];
            for col in 0..dim {
                for rb in 0..2 {
                    let row = col & !(1 << q) | (rb << q);
                    m[row][col] = u[rb][bit(col, q)];
                }
            }
        }
    }
    m
}

/// `U_m ... U_1 |0...0>`, each full operator applied to the running vector.
pub fn oracle_state(circuit: &Circuit) -> Vec<C> {
    let dim = 1usize << circuit.num_qubits;
    let mut psi = vec![c(0.0, 0.0); dim];
    psi[0] = c(1.0, 0.0);
    for op in &circuit.gates {
        let u = dense_gate(op, circuit.num_qubits);
        psi = u.iter().map(|row| row.iter().zip(&psi).map(|(a, b)| a * b).sum()).collect();
    }
    psi
}

pub fn max_abs_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn fidelity(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C>().norm_sqr()
}

/// A random 2x2 unitary from U3 angles.
pub fn custom_1q(theta: f64, phi: f64, lambda: f64) -> Matrix {
    let u = single(GateKind::U3, &[theta, phi, lambda]);
    Matrix::from_row_major(vec![u[0][0], u[0][1], u[1][0], u[1][1]]).unwrap()
}

const KINDS: [GateKind; 16] = [
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
    GateKind::U3,
    GateKind::CNOT,
    GateKind::CZ,
    GateKind::SWAP,
    GateKind::TOFFOLI,
    GateKind::Custom,
];

/// Builds a gate from raw random material; `picks` must be a permutation
/// prefix source of at least three distinct qubits or fewer when `n` is small.
fn build(n: usize, kind_ix: usize, picks: &[usize], angles: [f64; 3]) -> GateOp {
    let mut kind = KINDS[kind_ix % KINDS.len()];
    let need = match kind {
        GateKind::Custom => 1,
        k => k.arity().unwrap(),
    };
    if need > n {
        kind = GateKind::U3;
    }
    let mut qubits: Vec<usize> = Vec::new();
    for &p in picks {
        let q = p % n;
        if !qubits.contains(&q) {
            qubits.push(q);
        }
    }
    for q in 0..n {
        if !qubits.contains(&q) {
            qubits.push(q);
        }
    }
    match kind {
        GateKind::Custom => GateOp::custom(custom_1q(angles[0], angles[1], angles[2]), [qubits[0]]),
        k => {
            let arity = k.arity().unwrap();
            GateOp::with_params(k, angles[..k.param_count()].to_vec(), qubits[..arity].to_vec())
        }
    }
}

/// Random valid circuits over the whole gate set.
pub fn arb_circuit(max_qubits: usize, max_gates: usize) -> impl Strategy<Value = Circuit> {
    (1..=max_qubits).prop_flat_map(move |n| {
        let gate = (0..KINDS.len(), prop::collection::vec(0..64usize, 3), prop::array::uniform3(-2.0 * PI..2.0 * PI))
            .prop_map(move |(k, picks, angles)| build(n, k, &picks, angles));
        prop::collection::vec(gate, 0..=max_gates).prop_map(move |gates| Circuit {
            num_qubits: n,
            gates,
            name: String::new(),
        })
    })
}

/// The same, drawn from a plain seed for fixed-count loops.
pub fn seeded_circuit(seed: u64, max_qubits: usize, max_gates: usize) -> Circuit {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_qubits);
    let g = rng.gen_range(0..=max_gates);
    let gates = (0..g)
        .map(|_| {
            let picks = [rng.gen_range(0..64), rng.gen_range(0..64), rng.gen_range(0..64)];
            let angles = [rng.gen_range(-2.0 * PI..2.0 * PI), rng.gen_range(-2.0 * PI..2.0 * PI), rng.gen_range(-2.0 * PI..2.0 * PI)];
            build(n, rng.gen_range(0..KINDS.len()), &picks, angles)
        })
        .collect();
    Circuit {
        num_qubits: n,
        gates,
        name: format!("seeded{seed}"),
    }
}
