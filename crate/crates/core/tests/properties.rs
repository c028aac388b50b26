mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use svsim_core::engine::{sample, ParallelEngine, ReferenceEngine};
use svsim_core::memory::{estimate_memory, should_fallback, MemoryModelParams, MemoryWindow, Reading, MIB};
use svsim_core::noise::{evolve_noisy_observed, metrics, Distribution};
use svsim_core::optimize::{depth, fuse};
use svsim_core::precision::{rounding_bound, select_precision};
use svsim_core::qasm::{parse, to_json, SourceFormat};
use svsim_core::{gate_matrix, run_circuit, Circuit, Engine, GateKind, GateOp, Precision};

use common::{arb_circuit, dense_gate, fidelity, max_abs_diff, oracle_state};

fn engines() -> Vec<Box<dyn Engine>> {
    vec![Box::new(ReferenceEngine::new()), Box::new(ParallelEngine::new())]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn engines_match_matrix_product(c in arb_circuit(5, 30)) {
        let want = oracle_state(&c);
        for e in engines() {
            let got = run_circuit(e.as_ref(), &c, Precision::Double).unwrap().to_double();
            prop_assert!(max_abs_diff(&got, &want) < 1e-10, "{}", e.name());
        }
    }

    #[test]
    fn single_precision_stays_close(c in arb_circuit(5, 30)) {
        let want = oracle_state(&c);
        let got = run_circuit(&ReferenceEngine::new(), &c, Precision::Single).unwrap().to_double();
        prop_assert!(max_abs_diff(&got, &want) < 1e-4);
    }

    #[test]
    fn fusion_preserves_the_state(c in arb_circuit(6, 60), width in 1usize..=3) {
        let (fused, report) = fuse(&c, width);
        prop_assert!(fused.is_valid());
        prop_assert_eq!(report.original_gate_count, c.len());
        prop_assert_eq!(report.fused_gate_count, fused.len());
        prop_assert!(fused.len() <= c.len());
        prop_assert!(fused.gates.iter().all(|g| g.targets.len() <= width.max(3)));
        let e = ReferenceEngine::new();
        let a = run_circuit(&e, &c, Precision::Double).unwrap().to_double();
        let b = run_circuit(&e, &fused, Precision::Double).unwrap().to_double();
        prop_assert!(fidelity(&a, &b) >= 1.0 - 1e-10);
        prop_assert!(max_abs_diff(&a, &b) < 1e-10);
        prop_assert_eq!(report.fused_depth, depth(&fused));
    }

    #[test]
    fn fusion_is_idempotent_on_counts(c in arb_circuit(5, 40)) {
        let (once, _) = fuse(&c, 2);
        let (twice, _) = fuse(&once, 2);
        prop_assert!(twice.len() <= once.len());
    }

    #[test]
    fn named_gates_are_unitary(theta in -4.0 * PI..4.0 * PI, phi in -4.0 * PI..4.0 * PI, lambda in -4.0 * PI..4.0 * PI) {
        let params = [theta, phi, lambda];
        for kind in GateKind::NAMED {
            let m = gate_matrix(kind, &params[..kind.param_count()]).unwrap();
            prop_assert!(m.unitarity_error() < 1e-12, "{kind}");
            // Agrees with the textbook operator on its own qubits.
            let arity = kind.arity().unwrap();
            let op = GateOp::with_params(kind, params[..kind.param_count()].to_vec(), (0..arity).collect::<Vec<_>>());
            let dense = dense_gate(&op, arity);
            for r in 0..m.dim() {
                for col in 0..m.dim() {
                    prop_assert!((m.get(r, col) - dense[r][col]).norm() < 1e-14, "{kind} [{r},{col}]");
                }
            }
        }
    }

    #[test]
    fn precision_choice_is_monotone(n in 1usize..30, g in 0usize..5000, dn in 0usize..4, dg in 0usize..500, tol in 1e-9f64..1.0) {
        prop_assert!(rounding_bound(n + dn, g + dg, Precision::Single) >= rounding_bound(n, g, Precision::Single));
        if select_precision(n + dn, g + dg, tol).chosen == Precision::Single {
            prop_assert_eq!(select_precision(n, g, tol).chosen, Precision::Single);
        }
        if select_precision(n, g, tol).chosen == Precision::Double {
            prop_assert_eq!(select_precision(n + dn, g + dg, tol).chosen, Precision::Double);
        }
    }

    #[test]
    fn memory_estimate_is_monotone(n in 0usize..70, q in 1u32..4, double in any::<bool>()) {
        let prec = if double { Precision::Double } else { Precision::Single };
        let p = MemoryModelParams { s_prec: prec.amplitude_bytes(), q_max: q, ..MemoryModelParams::default() };
        let wider = MemoryModelParams { q_max: q + 1, ..p };
        prop_assert!(estimate_memory(n + 1, &p) >= estimate_memory(n, &p));
        prop_assert!(estimate_memory(n, &wider) >= estimate_memory(n, &p));
        if n < 60 {
            prop_assert!(estimate_memory(n, &p) >= (1u64 << n) * prec.amplitude_bytes());
        }
    }

    #[test]
    fn trigger_fires_no_later_than_breach(
        start in 600u64..4096,
        drops in prop::collection::vec(0u64..64, 1..40),
        horizon in 0.0f64..5.0,
        dt in 0.01f64..1.0,
    ) {
        let params = MemoryModelParams::default();
        let mut window = MemoryWindow::default();
        let mut available = start * MIB;
        let mut fired = None;
        let mut breach = None;
        for (i, d) in std::iter::once(0).chain(drops).enumerate() {
            available = available.saturating_sub(d * MIB);
            window.push(Reading { t: i as f64 * dt, available }).unwrap();
            if fired.is_none() && should_fallback(&window, &params, horizon) {
                fired = Some(i);
            }
            if breach.is_none() && available < params.reserve_bytes {
                breach = Some(i);
            }
        }
        if let Some(b) = breach {
            prop_assert!(fired.is_some_and(|f| f <= b), "fired {fired:?}, breach {b}");
        }
    }

    #[test]
    fn json_round_trip(c in arb_circuit(6, 40)) {
        let text = to_json(&c);
        let back = parse(&text, SourceFormat::Json).unwrap();
        prop_assert_eq!(back.num_qubits, c.num_qubits);
        prop_assert_eq!(back.gates.len(), c.gates.len());
        for (a, b) in back.gates.iter().zip(&c.gates) {
            prop_assert_eq!(a.kind, b.kind);
            prop_assert_eq!(&a.targets, &b.targets);
            for (x, y) in a.params.iter().zip(&b.params) {
                prop_assert!((x - y).abs() <= 1e-15 * y.abs().max(1.0));
            }
            if let (Some(x), Some(y)) = (&a.matrix, &b.matrix) {
                prop_assert!(x.max_abs_diff(y) <= 1e-15);
            }
        }
        prop_assert_eq!(to_json(&back), text);
    }

    #[test]
    fn qasm_parser_is_total(text in "\\PC{0,200}") {
        let _ = parse(&text, SourceFormat::Qasm2);
        let _ = parse(&text, SourceFormat::Json);
    }

    #[test]
    fn qasm_parser_survives_mutations(cut in 0usize..400, insert in "[;\\[\\]()a-z0-9 ,.\\-+*/>\"]{0,6}") {
        let src = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[3];\ncreg c[3];\nh q[0];\ncx q[0],q[1];\nrz(pi/4) q[2];\nu3(0.1,0.2,-pi) q[1];\nbarrier q;\nmeasure q -> c;\n";
        let at = src.char_indices().map(|(i, _)| i).nth(cut % src.len()).unwrap_or(0);
        let mutated = format!("{}{}{}", &src[..at], insert, &src[at..]);
        if let Err(errors) = parse(&mutated, SourceFormat::Qasm2) {
            prop_assert!(!errors.is_empty());
            for e in &errors {
                prop_assert!(e.line >= 1 && e.column >= 1);
                prop_assert!(e.line <= mutated.lines().count().max(1) + 1);
            }
        }
    }

    #[test]
    fn sampling_respects_support(c in arb_circuit(4, 20), shots in 1u64..3000, seed in any::<u64>()) {
        let state = run_circuit(&ReferenceEngine::new(), &c, Precision::Double).unwrap();
        let probs = state.probabilities();
        let counts = sample(&state, shots, seed).unwrap();
        prop_assert_eq!(counts.total(), shots);
        for k in counts.counts.keys() {
            prop_assert_eq!(k.len(), c.num_qubits);
            prop_assert!(probs[usize::from_str_radix(k, 2).unwrap()] > 0.0);
        }
        prop_assert_eq!(&counts, &sample(&state, shots, seed).unwrap());
    }

    #[test]
    fn density_matrix_stays_physical(c in arb_circuit(3, 12), p in 0.0f64..=1.0) {
        let mut steps = 0;
        let rho = evolve_noisy_observed(&c, p, 8, |rho| {
            steps += 1;
            assert!((rho.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-10);
            assert!(rho.hermiticity_error() < 1e-10);
            assert!(rho.min_principal_minor() > -1e-10);
        })
        .unwrap();
        prop_assert!(steps >= c.len());
        let probs = rho.probabilities();
        prop_assert!(probs.iter().all(|&x| x > -1e-12));
    }

    #[test]
    fn distribution_metrics_bounds(a in prop::collection::vec(0.0f64..1.0, 4), b in prop::collection::vec(0.0f64..1.0, 4)) {
        let norm = |v: &[f64]| -> Option<Distribution> {
            let s: f64 = v.iter().sum();
            (s > 1e-6).then(|| v.iter().enumerate().map(|(i, x)| (format!("{i:02b}"), x / s)).collect())
        };
        if let (Some(p), Some(q)) = (norm(&a), norm(&b)) {
            let m = metrics(&p, &q).unwrap();
            let r = metrics(&q, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&m.classical_fidelity) && (0.0..=1.0).contains(&m.tvd));
            prop_assert!((m.classical_fidelity - r.classical_fidelity).abs() < 1e-12);
            prop_assert!((m.tvd - r.tvd).abs() < 1e-12);
            // Fuchs-van de Graaf: 1 - sqrt(F) <= TVD <= sqrt(1 - F).
            prop_assert!(1.0 - m.classical_fidelity.sqrt() <= m.tvd + 1e-9);
            prop_assert!(m.tvd <= (1.0 - m.classical_fidelity).max(0.0).sqrt() + 1e-9);
            let same = metrics(&p, &p).unwrap();
            prop_assert!((same.classical_fidelity - 1.0).abs() < 1e-12 && same.tvd < 1e-12);
        }
    }
}

#[test]
fn chain_collapses_to_one_gate() {
    let kinds = [GateKind::H, GateKind::T, GateKind::RX, GateKind::U3, GateKind::S];
    for k in 2..=64 {
        let mut c = Circuit::new(2);
        for i in 0..k {
            let kind = kinds[i % kinds.len()];
            let params = vec![0.1 * i as f64 + 0.05; kind.param_count()];
            c.push(GateOp::with_params(kind, params, [1]));
        }
        let (fused, report) = fuse(&c, 2);
        assert_eq!(fused.len(), 1, "k = {k}");
        assert_eq!((report.original_depth, report.fused_depth), (k, 1));
        let e = ReferenceEngine::new();
        let a = run_circuit(&e, &c, Precision::Double).unwrap();
        let b = run_circuit(&e, &fused, Precision::Double).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }
}
