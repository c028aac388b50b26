//! DAG-based gate fusion.
//!
//! Gates `u -> v` are merged when they share an edge, their combined qubit
//! set fits the fusion width, and `u` is `v`'s immediate predecessor on every
//! qubit they share. The merged gate is `embed(U_v) * embed(U_u)` over the
//! union of their qubits in ascending order, and always becomes a custom
//! unitary. Passes repeat until nothing fuses; the result is emitted in
//! topological order with ties broken by original program position.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use super::dag::depth;
use crate::circuit::{Circuit, GateOp};

pub const DEFAULT_FUSE_WIDTH: usize = 2;
/// Widest fused gate the pass will build.
pub const MAX_FUSE_WIDTH: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionReport {
    pub original_gate_count: usize,
    pub fused_gate_count: usize,
    pub original_depth: usize,
    pub fused_depth: usize,
    /// `100 * (1 - fused_depth / original_depth)`; 0 for an empty circuit.
    pub reduction_percent: f64,
    /// Wall time of the fusion pass, seconds.
    pub fusion_pass_time: f64,
}

impl FusionReport {
    pub fn depth_reduction(original: usize, fused: usize) -> f64 {
        if original == 0 {
            0.0
        } else {
            100.0 * (1.0 - fused as f64 / original as f64)
        }
    }
}

struct WorkNode {
    op: GateOp,
    /// Ascending.
    qubits: Vec<usize>,
    seq: usize,
    alive: bool,
    /// Per qubit in `qubits` (same order): previous / next gate on that wire.
    prev: Vec<Option<usize>>,
    next: Vec<Option<usize>>,
}

impl WorkNode {
    fn slot(&self, qubit: usize) -> usize {
        self.qubits
            .binary_search(&qubit)
            .expect("qubit not on this node")
    }

    fn prev_on(&self, qubit: usize) -> Option<usize> {
        self.prev[self.slot(qubit)]
    }

    fn next_on(&self, qubit: usize) -> Option<usize> {
        self.next[self.slot(qubit)]
    }

    fn set_prev(&mut self, qubit: usize, node: Option<usize>) {
        let s = self.slot(qubit);
        self.prev[s] = node;
    }

    fn set_next(&mut self, qubit: usize, node: Option<usize>) {
        let s = self.slot(qubit);
        self.next[s] = node;
    }

    fn predecessors(&self) -> Vec<usize> {
        let mut p: Vec<usize> = self.prev.iter().flatten().copied().collect();
        p.sort_unstable();
        p.dedup();
        p
    }

    fn successors(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.next.iter().flatten().copied().collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

struct FusionGraph {
    nodes: Vec<WorkNode>,
}

impl FusionGraph {
    fn new(circuit: &Circuit) -> Self {
        let mut last: Vec<Option<usize>> = vec![None; circuit.num_qubits];
        let mut nodes: Vec<WorkNode> = Vec::with_capacity(circuit.gates.len());
        for (v, op) in circuit.gates.iter().enumerate() {
            let mut qubits = op.targets.clone();
            qubits.sort_unstable();
            qubits.dedup();
            let mut prev = Vec::with_capacity(qubits.len());
            for &q in &qubits {
                if let Some(u) = last[q] {
                    nodes[u].set_next(q, Some(v));
                }
                prev.push(last[q]);
                last[q] = Some(v);
            }
            nodes.push(WorkNode {
                op: op.clone(),
                next: vec![None; qubits.len()],
                qubits,
                seq: v,
                alive: true,
                prev,
            });
        }
        Self { nodes }
    }

    /// Kahn's algorithm, smallest original position first among ready nodes.
    fn topological_order(&self) -> Vec<usize> {
        let mut indeg = vec![0usize; self.nodes.len()];
        for (v, node) in self.nodes.iter().enumerate() {
            if node.alive {
                indeg[v] = node.predecessors().len();
            }
        }
        let mut ready: BinaryHeap<Reverse<(usize, usize)>> = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(v, n)| n.alive && indeg[*v] == 0)
            .map(|(v, n)| Reverse((n.seq, v)))
            .collect();
        let mut order = Vec::new();
        while let Some(Reverse((_, v))) = ready.pop() {
            order.push(v);
            for s in self.nodes[v].successors() {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    ready.push(Reverse((self.nodes[s].seq, s)));
                }
            }
        }
        debug_assert_eq!(order.len(), self.nodes.iter().filter(|n| n.alive).count(), "cycle in fusion graph");
        order
    }

    fn union_qubits(&self, u: usize, v: usize) -> Vec<usize> {
        let mut q = self.nodes[u].qubits.clone();
        q.extend_from_slice(&self.nodes[v].qubits);
        q.sort_unstable();
        q.dedup();
        q
    }

    /// True if some node in `targets` is reachable from `from` without
    /// passing through `skip`.
    fn reaches_any(&self, from: usize, skip: usize, targets: &[usize]) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack: Vec<usize> = self.nodes[from].successors();
        while let Some(x) = stack.pop() {
            if x == skip || seen[x] {
                continue;
            }
            if targets.contains(&x) {
                return true;
            }
            seen[x] = true;
            stack.extend(self.nodes[x].successors());
        }
        false
    }

    fn fusible(&self, u: usize, v: usize, width: usize) -> bool {
        let (nu, nv) = (&self.nodes[u], &self.nodes[v]);
        if self.union_qubits(u, v).len() > width {
            return false;
        }
        let shared: Vec<usize> = nv.qubits.iter().copied().filter(|q| nu.qubits.contains(q)).collect();
        if shared.is_empty() || shared.iter().any(|&q| nv.prev_on(q) != Some(u)) {
            return false;
        }
        // A path u -> x -> ... -> p -> v through another predecessor p would
        // become a cycle after merging. It needs a wire of u not on v and a
        // wire of v not on u, so it only arises for widths of three or more.
        let u_only = nu.qubits.len() > shared.len();
        let v_only = nv.qubits.len() > shared.len();
        if u_only && v_only {
            let others: Vec<usize> = nv.predecessors().into_iter().filter(|&p| p != u).collect();
            if !others.is_empty() && self.reaches_any(u, v, &others) {
                return false;
            }
        }
        true
    }

    /// Replaces `u` by the product gate and removes `v`.
    fn fuse(&mut self, u: usize, v: usize) {
        let union = self.union_qubits(u, v);
        let fused = {
            let (nu, nv) = (&self.nodes[u], &self.nodes[v]);
            let mu = nu.op.effective_unitary().embed(&nu.op.targets, &union);
            let mv = nv.op.effective_unitary().embed(&nv.op.targets, &union);
            GateOp::custom(&mv * &mu, union.clone())
        };

        // New wire links for u over the union.
        let mut prev = Vec::with_capacity(union.len());
        let mut next = Vec::with_capacity(union.len());
        for &q in &union {
            let on_u = self.nodes[u].qubits.contains(&q);
            let on_v = self.nodes[v].qubits.contains(&q);
            let p = if on_u {
                self.nodes[u].prev_on(q)
            } else {
                self.nodes[v].prev_on(q)
            };
            let n = if on_v {
                self.nodes[v].next_on(q)
            } else {
                self.nodes[u].next_on(q)
            };
            prev.push(p);
            next.push(n);
        }
        for (i, &q) in union.iter().enumerate() {
            if let Some(p) = prev[i] {
                self.nodes[p].set_next(q, Some(u));
            }
            if let Some(n) = next[i] {
                self.nodes[n].set_prev(q, Some(u));
            }
        }
        let node = &mut self.nodes[u];
        node.op = fused;
        node.qubits = union;
        node.prev = prev;
        node.next = next;
        let dead = &mut self.nodes[v];
        dead.alive = false;
        dead.prev.iter_mut().for_each(|p| *p = None);
        dead.next.iter_mut().for_each(|n| *n = None);
    }

    /// One sweep in topological order; returns the number of fusions.
    fn pass(&mut self, width: usize) -> usize {
        let mut fused = 0;
        for v in self.topological_order() {
            if !self.nodes[v].alive {
                continue;
            }
            let mut preds = self.nodes[v].predecessors();
            preds.sort_by_key(|&p| self.nodes[p].seq);
            if let Some(u) = preds.into_iter().find(|&u| self.fusible(u, v, width)) {
                self.fuse(u, v);
                fused += 1;
            }
        }
        fused
    }

    fn into_circuit(self, template: &Circuit) -> Circuit {
        let order = self.topological_order();
        let mut slots: Vec<Option<GateOp>> = self.nodes.into_iter().map(|n| n.alive.then_some(n.op)).collect();
        Circuit {
            num_qubits: template.num_qubits,
            name: template.name.clone(),
            gates: order.into_iter().map(|v| slots[v].take().unwrap()).collect(),
        }
    }
}

/// Fuses `circuit` with at most `max_fuse_width` qubits per fused gate
/// (clamped to [`MAX_FUSE_WIDTH`]). The input must be valid.
pub fn fuse(circuit: &Circuit, max_fuse_width: usize) -> (Circuit, FusionReport) {
    let width = max_fuse_width.min(MAX_FUSE_WIDTH);
    let start = Instant::now();
    let mut graph = FusionGraph::new(circuit);
    if width > 0 {
        let mut remaining = circuit.gates.len();
        loop {
            let fused = graph.pass(width);
            if fused == 0 {
                break;
            }
            // Each productive pass removes at least one gate.
            debug_assert!(fused <= remaining);
            remaining -= fused;
        }
    }
    let out = graph.into_circuit(circuit);
    let fusion_pass_time = start.elapsed().as_secs_f64();
    let original_depth = depth(circuit);
    let fused_depth = depth(&out);
    let report = FusionReport {
        original_gate_count: circuit.gates.len(),
        fused_gate_count: out.gates.len(),
        original_depth,
        fused_depth,
        reduction_percent: FusionReport::depth_reduction(original_depth, fused_depth),
        fusion_pass_time,
    };
    (out, report)
}

#[derive(Debug, Error, PartialEq)]
pub enum SpeedupError {
    #[error("fused cost g_f * c2 + c_fusion is zero")]
    ZeroDenominator,
}

/// Modelled fusion speedup
/// `(g0 * c1 + g0 * c_overhead) / (gf * c2 + c_fusion)`, where `c_fusion` is
/// the report's pass time. Costs are seconds per gate.
pub fn model_fusion_speedup(report: &FusionReport, c1: f64, c2: f64, c_overhead: f64) -> Result<f64, SpeedupError> {
    let g0 = report.original_gate_count as f64;
    let gf = report.fused_gate_count as f64;
    let denominator = gf * c2 + report.fusion_pass_time;
    if denominator == 0.0 {
        return Err(SpeedupError::ZeroDenominator);
    }
    Ok((g0 * c1 + g0 * c_overhead) / denominator)
}
