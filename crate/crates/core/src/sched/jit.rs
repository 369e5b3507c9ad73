use super::plan::fetch_estimate;
use super::{argmin, Env};
use crate::monitor::SstView;
use crate::workflow::{Dfg, WorkerId};

/// Earliest-start greedy for a task whose inputs are all produced.
///
/// `pred_workers[i]` is where `dfg.preds(t)[i]` ran. Score is
/// `max(FT, now) + fetch + slowest remote input + R`; no eviction penalty and
/// no knowledge of the rest of the job.
pub fn jit_assign(
    dfg: &Dfg,
    t: usize,
    pred_workers: &[WorkerId],
    view: &SstView,
    now: f64,
    env: &Env<'_>,
) -> WorkerId {
    let task = dfg.task(t);
    let scores = (0..env.workers).map(|w| {
        let row = view.row(w);
        let transfer = dfg
            .preds(t)
            .iter()
            .zip(pred_workers)
            .filter(|&(_, &pw)| pw != w)
            .map(|(&p, _)| env.link.td_output(dfg.task(p)))
            .fold(0.0, f64::max);
        row.queue_finish_time.max(now)
            + fetch_estimate(task, row, 0, 0, env, None)
            + transfer
            + env.runtime(task, w)
    });
    argmin(scores).0
}
