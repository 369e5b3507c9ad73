use super::plan::fetch_estimate;
use super::{argmin, Env, SchedulerConfig};
use crate::monitor::SstView;
use crate::workflow::{Dfg, WorkerId};

/// True when the planned worker's backlog exceeds `threshold` task runtimes.
pub fn needs_reschedule(wait: f64, runtime: f64, threshold: f64) -> bool {
    wait > runtime * threshold
}

/// Revisit the placement of successor `s` when a predecessor finishes on
/// `completing`.
///
/// Joins stay put. Otherwise, if the planned worker's published backlog is
/// too long, every worker is rescored by
/// `max(FT, now) + TD_model + R`, plus the input transfer for workers other
/// than `completing`.
#[allow(clippy::too_many_arguments)]
pub fn adjust_task(
    dfg: &Dfg,
    s: usize,
    planned: WorkerId,
    completing: WorkerId,
    view: &SstView,
    now: f64,
    env: &Env<'_>,
    cfg: &SchedulerConfig,
) -> WorkerId {
    if dfg.is_join(s) {
        return planned;
    }
    let task = dfg.task(s);
    let wait = (view.row(planned).queue_finish_time - now).max(0.0);
    if !needs_reschedule(wait, env.runtime(task, planned), cfg.threshold) {
        return planned;
    }
    let penalty = cfg.model_locality.then_some(cfg.penalty);
    let scores = (0..env.workers).map(|w| {
        let row = view.row(w);
        let fetch = if cfg.model_locality { fetch_estimate(task, row, 0, 0, env, penalty) } else { 0.0 };
        let transfer = if w == completing { 0.0 } else { env.link.td_input(task.input_bytes) };
        row.queue_finish_time.max(now) + fetch + env.runtime(task, w) + transfer
    });
    argmin(scores).0
}
