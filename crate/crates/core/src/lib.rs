//! State-vector quantum circuit simulation with runtime-adaptive execution.
//!
//! The pipeline is parse -> fuse -> choose precision -> choose engine ->
//! execute, with a memory governor able to migrate the state to the
//! reference engine between gates.

pub mod bench;
pub mod circuit;
pub mod engine;
pub mod generators;
pub mod matrix;
pub mod memory;
pub mod noise;
pub mod optimize;
pub mod pipeline;
pub mod precision;
pub mod qasm;
pub mod selector;

pub use circuit::{gate_matrix, Circuit, GateKind, GateOp, Precision};
pub use engine::{run_circuit, state_fidelity, Engine, EngineId, EngineRegistry, StateVector};
pub use matrix::Matrix;
