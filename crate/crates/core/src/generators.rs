//! Built-in benchmark circuits.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, GateKind, GateOp};

pub fn bell() -> Circuit {
    let mut c = Circuit::named(2, "bell");
    c.push(GateOp::h(0)).push(GateOp::cnot(0, 1));
    c
}

/// H on qubit 0 then a CNOT chain.
pub fn ghz(n: usize) -> Circuit {
    let mut c = Circuit::named(n, format!("ghz{n}"));
    c.push(GateOp::h(0));
    for q in 1..n {
        c.push(GateOp::cnot(q - 1, q));
    }
    c
}

/// Controlled phase `diag(1, 1, 1, e^{i lambda})` as RZ/CNOT, up to a
/// global phase.
pub fn controlled_phase(c: &mut Circuit, lambda: f64, control: usize, target: usize) {
    c.push(GateOp::rz(lambda / 2.0, control))
        .push(GateOp::cnot(control, target))
        .push(GateOp::rz(-lambda / 2.0, target))
        .push(GateOp::cnot(control, target))
        .push(GateOp::rz(lambda / 2.0, target));
}

/// Quantum Fourier transform on little-endian integers:
/// `|x> -> 2^{-n/2} sum_y e^{2 pi i x y / 2^n} |y>` up to a global phase.
pub fn qft(n: usize) -> Circuit {
    let mut c = Circuit::named(n, format!("qft{n}"));
    for j in (0..n).rev() {
        c.push(GateOp::h(j));
        for k in (0..j).rev() {
            controlled_phase(&mut c, PI / (1u64 << (j - k)) as f64, k, j);
        }
    }
    for i in 0..n / 2 {
        c.push(GateOp::new(GateKind::SWAP, [i, n - 1 - i]));
    }
    c
}

/// Haar-random single-qubit unitary as U3 angles.
pub fn haar_u3(rng: &mut impl Rng) -> [f64; 3] {
    let theta = (1.0 - 2.0 * rng.gen::<f64>()).acos();
    let phi = rng.gen_range(0.0..2.0 * PI);
    let lambda = rng.gen_range(0.0..2.0 * PI);
    [theta, phi, lambda]
}

/// `g` Haar-random single-qubit gates, each on a uniformly chosen qubit.
pub fn random_su2_circuit(n: usize, g: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::named(n, format!("su2_{n}_{seed}"));
    for _ in 0..g {
        let q = rng.gen_range(0..n);
        let [t, p, l] = haar_u3(&mut rng);
        c.push(GateOp::u3(t, p, l, q));
    }
    c
}

const ONE_QUBIT: [GateKind; 10] = [
    GateKind::H,
    GateKind::X,
    GateKind::Y,
    GateKind::Z,
    GateKind::S,
    GateKind::T,
    GateKind::RX,
    GateKind::RY,
    GateKind::RZ,
    GateKind::U3,
];

fn distinct(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let q = rng.gen_range(0..n);
        if !out.contains(&q) {
            out.push(q);
        }
    }
    out
}

fn random_op(rng: &mut impl Rng, kind: GateKind, targets: Vec<usize>) -> GateOp {
    let params = (0..kind.param_count()).map(|_| rng.gen_range(-PI..PI)).collect();
    GateOp::with_params(kind, params, targets)
}

/// Mixed named gates: mostly single-qubit, about a quarter two-qubit
/// (CNOT, CZ, SWAP) and occasional Toffolis when `n >= 3`.
pub fn random_circuit(n: usize, g: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::named(n, format!("random{n}"));
    for _ in 0..g {
        let roll: f64 = rng.gen();
        let (kind, targets) = if n >= 3 && roll < 0.03 {
            (GateKind::TOFFOLI, distinct(&mut rng, n, 3))
        } else if n >= 2 && roll < 0.28 {
            let kind = [GateKind::CNOT, GateKind::CNOT, GateKind::CZ, GateKind::SWAP][rng.gen_range(0..4)];
            (kind, distinct(&mut rng, n, 2))
        } else {
            (ONE_QUBIT[rng.gen_range(0..ONE_QUBIT.len())], vec![rng.gen_range(0..n)])
        };
        c.push(random_op(&mut rng, kind, targets));
    }
    c
}

/// Hardware-efficient ansatz: per layer RY and RZ on every qubit, then a
/// CNOT ring over neighbours `(q, q+1 mod n)` laid out in brick order (even
/// bonds, then odd bonds) so independent CNOTs share a layer.
pub fn ansatz(n: usize, layers: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::named(n, format!("ansatz{n}"));
    let bonds: Vec<usize> = match n {
        0 | 1 => vec![],
        2 => vec![0],
        _ => {
            let mut b: Vec<usize> = (0..n).step_by(2).filter(|&q| q + 1 < n).collect();
            b.extend((1..n).step_by(2));
            if n % 2 == 1 {
                b.push(n - 1);
            }
            b
        }
    };
    for _ in 0..layers {
        for q in 0..n {
            c.push(GateOp::ry(rng.gen_range(-PI..PI), q));
            c.push(GateOp::rz(rng.gen_range(-PI..PI), q));
        }
        for &q in &bonds {
            c.push(GateOp::cnot(q, (q + 1) % n));
        }
    }
    c
}
