use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dfg `{dfg}`: cycle detected through task `{task}`")]
    Cycle { dfg: String, task: String },
    #[error("dfg `{dfg}`: expected exactly one entry task, found {found:?}")]
    MultipleEntries { dfg: String, found: Vec<String> },
    #[error("dfg `{dfg}`: expected exactly one exit task, found {found:?}")]
    MultipleExits { dfg: String, found: Vec<String> },
    #[error("dfg `{dfg}`: edge {from} -> {to} names an unknown task")]
    DanglingEdge { dfg: String, from: String, to: String },
    #[error("dfg `{dfg}`: invalid task `{task}`: {reason}")]
    InvalidTask { dfg: String, task: String, reason: String },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("model id {0} is outside the bitmap range 0..64")]
    ModelIdOutOfRange(u32),
    #[error("model of {size} bytes exceeds GPU capacity of {capacity} bytes")]
    ModelTooLarge { size: u64, capacity: u64 },
    #[error("task `{task}` scored before its predecessor `{pred}` was assigned")]
    PredecessorUnassigned { task: String, pred: String },
    #[error("slow-down factor undefined: latency {latency} s, lower bound {lower_bound} s")]
    SlowDown { latency: f64, lower_bound: f64 },
    #[error("{path}:{line}: {reason}")]
    Parse { path: String, line: usize, reason: String },
    #[error("unknown dfg `{0}`")]
    UnknownDfg(String),
    #[error("invalid config key `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("simulation audit failed: {0}")]
    Audit(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
