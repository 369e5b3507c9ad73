//! Placement policies: the cache-aware planner with dynamic adjustment, and
//! the JIT, HEFT and hash baselines.

mod adjust;
mod hash;
mod jit;
mod plan;

pub use adjust::{adjust_task, needs_reschedule};
pub use hash::{hash_assign, stable_hash};
pub use jit::jit_assign;
pub use plan::{at_all_inputs, heft_plan, model_fetch_time, plan_job, PlanContext};

use std::fmt;
use std::str::FromStr;

use crate::cost::LinkParams;
use crate::workflow::{Catalog, RuntimeModel, TaskSpec, WorkerId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SchedulerKind {
    Compass,
    Jit,
    Heft,
    Hash,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 4] =
        [SchedulerKind::Compass, SchedulerKind::Jit, SchedulerKind::Heft, SchedulerKind::Hash];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Compass => "compass",
            SchedulerKind::Jit => "jit",
            SchedulerKind::Heft => "heft",
            SchedulerKind::Hash => "hash",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        SchedulerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scheduler `{s}` (expected compass, jit, heft or hash)"))
    }
}

/// Surcharge added to a fetch that needs evictions first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyMode {
    /// `factor * TD_model`; the default factor of 1 doubles the fetch time.
    Proportional(f64),
    /// Fixed seconds.
    Constant(f64),
}

impl PenaltyMode {
    pub fn penalty(self, fetch_s: f64) -> f64 {
        match self {
            PenaltyMode::Proportional(f) => f * fetch_s,
            PenaltyMode::Constant(c) => c,
        }
    }
}

impl Default for PenaltyMode {
    fn default() -> Self {
        PenaltyMode::Proportional(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulerConfig {
    pub kind: SchedulerKind,
    pub dynamic_adjustment: bool,
    pub model_locality: bool,
    /// Reschedule a successor when its planned worker's wait exceeds
    /// `threshold * R(t, w)`.
    pub threshold: f64,
    pub penalty: PenaltyMode,
}

impl SchedulerConfig {
    pub fn new(kind: SchedulerKind) -> Self {
        Self {
            kind,
            dynamic_adjustment: true,
            model_locality: true,
            threshold: 2.0,
            penalty: PenaltyMode::default(),
        }
    }
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self::new(SchedulerKind::Compass)
    }
}

/// Static inputs every placement decision reads.
#[derive(Debug, Clone, Copy)]
pub struct Env<'a> {
    pub catalog: &'a Catalog,
    pub runtimes: &'a RuntimeModel,
    pub link: &'a LinkParams,
    pub workers: usize,
}

impl Env<'_> {
    pub fn runtime(&self, task: &TaskSpec, w: WorkerId) -> f64 {
        self.runtimes.runtime(task, w)
    }

    pub fn fetch_secs(&self, task: &TaskSpec) -> f64 {
        task.model.map_or(0.0, |m| self.link.td_model(self.catalog.model(m)))
    }
}

/// Index of the smallest score; the lowest worker id wins ties.
pub(crate) fn argmin(scores: impl IntoIterator<Item = f64>) -> (WorkerId, f64) {
    let mut best = (0, f64::INFINITY);
    for (w, s) in scores.into_iter().enumerate() {
        if s < best.1 {
            best = (w, s);
        }
    }
    best
}
