//! Deterministic discrete-event cluster simulator.

pub mod audit;
pub mod config;
pub mod engine;
pub mod event;
pub mod runtime;

pub use audit::{audit_trace, AuditReport, TraceEvent};
pub use config::{ClusterConfig, SimConfig, DEFAULT_SEED};
pub use engine::{arrival_rng, run_simulation, simulate, SimResult};
pub use event::{Event, EventKind, EventQueue};
pub use runtime::{sample_runtime, RuntimeNoise};
