//! Gate dependency DAG.
//!
//! Built in one scan by remembering the last gate seen on every qubit: gate
//! `v` gets an edge from the latest earlier gate on each of its qubits. A
//! predecessor sharing several qubits with `v` contributes a single edge.

use crate::circuit::{Circuit, GateOp};

#[derive(Debug, Clone)]
pub struct DagNode {
    pub op: GateOp,
    /// `q(v)`, ascending.
    pub qubits: Vec<usize>,
    /// Position in the source circuit; used as the topological tie-break.
    pub seq: usize,
}

#[derive(Debug, Clone)]
pub struct GateDag {
    pub num_qubits: usize,
    pub nodes: Vec<DagNode>,
    /// `(u, v)` pairs, `u` earlier than `v`, in insertion order.
    pub edges: Vec<(usize, usize)>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
}

fn sorted_qubits(op: &GateOp) -> Vec<usize> {
    let mut q = op.targets.clone();
    q.sort_unstable();
    q.dedup();
    q
}

impl GateDag {
    pub fn build(circuit: &Circuit) -> Self {
        let g = circuit.gates.len();
        let mut last: Vec<Option<usize>> = vec![None; circuit.num_qubits];
        let mut nodes = Vec::with_capacity(g);
        let mut edges = Vec::new();
        let mut preds = vec![Vec::new(); g];
        let mut succs = vec![Vec::new(); g];
        for (v, op) in circuit.gates.iter().enumerate() {
            let qubits = sorted_qubits(op);
            for &q in &qubits {
                if let Some(u) = last[q] {
                    if !preds[v].contains(&u) {
                        preds[v].push(u);
                        succs[u].push(v);
                        edges.push((u, v));
                    }
                }
                last[q] = Some(v);
            }
            nodes.push(DagNode {
                op: op.clone(),
                qubits,
                seq: v,
            });
        }
        Self {
            num_qubits: circuit.num_qubits,
            nodes,
            edges,
            preds,
            succs,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.preds[v]
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succs[v]
    }

    /// `sum_v |q(v)|`, the upper bound on the edge count.
    pub fn edge_bound(&self) -> usize {
        self.nodes.iter().map(|n| n.qubits.len()).sum()
    }

    /// Layer of every node: 1 + the deepest predecessor layer.
    pub fn layers(&self) -> Vec<usize> {
        // Nodes are stored in program order, which is already topological.
        let mut layer = vec![0usize; self.nodes.len()];
        for v in 0..self.nodes.len() {
            layer[v] = 1 + self.preds[v].iter().map(|&u| layer[u]).max().unwrap_or(0);
        }
        layer
    }

    /// Longest path length counted in vertices.
    pub fn depth(&self) -> usize {
        self.layers().into_iter().max().unwrap_or(0)
    }
}

/// Circuit depth: the longest dependency chain, counted in gates.
pub fn depth(circuit: &Circuit) -> usize {
    GateDag::build(circuit).depth()
}
