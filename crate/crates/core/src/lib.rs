//! Cache-aware decentralized scheduling of DAG-structured ML workflows on a
//! GPU cluster, and a discrete-event simulator to evaluate it against JIT,
//! HEFT and hash placement.

pub mod cluster;
pub mod cost;
pub mod dfg_file;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod monitor;
pub mod sched;
pub mod sim;
pub mod workflow;
pub mod workload;

#[cfg(test)]
pub(crate) mod testutil;

pub use cluster::{CacheStats, EvictionPolicy, GpuCache, WorkerState};
pub use cost::LinkParams;
pub use dfg_file::{builtin_workflows, load_catalog, parse_catalog};
pub use error::{Error, Result};
pub use experiments::{expand_preset, ExperimentPreset, PresetOverrides, PRESETS};
pub use metrics::{
    compare, read_jobs, read_summary, slow_down_factor, summarize, write_results, Comparison, JobRecord,
    SummaryRow, WorkerRecord,
};
pub use monitor::{SstRow, SstView, StateMonitor};
pub use sched::{PenaltyMode, SchedulerConfig, SchedulerKind};
pub use sim::{run_simulation, simulate, RuntimeNoise, SimConfig, SimResult};
pub use workflow::{
    compute_lower_bound, compute_ranks, Adfg, Catalog, Dfg, JobId, JobInstance, ModelId, ModelSpec,
    RuntimeModel, TaskSpec, WorkerId,
};
pub use workload::{WorkloadMode, WorkloadSpec};
