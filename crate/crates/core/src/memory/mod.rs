//! Memory governance: footprint estimate, availability probing and
//! migration of a running simulation to a fallback engine.

pub mod executor;
pub mod fallback;
pub mod model;
pub mod probe;

pub use executor::{Execution, ExecutionError, Executor, FallbackTrigger};
pub use fallback::{execute_fallback, predicted_transfer_seconds, FallbackError, FallbackEvent};
pub use model::{check_feasible, estimate_memory, Feasibility, MemoryModelParams, GIB, MIB};
pub use probe::{should_fallback, HostMemory, MemoryProbe, MemorySource, MemoryWindow, Reading, ScriptedTrace};
