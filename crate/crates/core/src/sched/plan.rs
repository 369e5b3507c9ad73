use super::{argmin, Env, PenaltyMode, SchedulerConfig};
use crate::error::{Error, Result};
use crate::monitor::{SstRow, SstView};
use crate::workflow::{rank_order, Adfg, Dfg, JobId, TaskSpec, WorkerId};

/// Scratch state of one planning pass.
#[derive(Debug, Clone)]
pub struct PlanContext<'v> {
    pub view: &'v SstView,
    /// When the job's input is available to its entry task.
    pub release: f64,
    /// Projected finish time of each worker's queue, updated as tasks are placed.
    pub worker_ft: Vec<f64>,
    pub assigned: Vec<Option<WorkerId>>,
    pub finish: Vec<f64>,
    /// Models this pass already decided to fetch, per worker.
    pub pending_models: Vec<u64>,
    pub pending_bytes: Vec<u64>,
}

impl<'v> PlanContext<'v> {
    /// Worker finish times come from the view, floored at `now`.
    pub fn new(view: &'v SstView, now: f64, release: f64, tasks: usize) -> Self {
        let ft = view.rows.iter().map(|r| r.queue_finish_time.max(now)).collect();
        Self::with_ft(view, ft, release, tasks)
    }

    /// Every worker assumed idle at `now`.
    pub fn idle(view: &'v SstView, now: f64, release: f64, tasks: usize) -> Self {
        Self::with_ft(view, vec![now; view.len()], release, tasks)
    }

    fn with_ft(view: &'v SstView, worker_ft: Vec<f64>, release: f64, tasks: usize) -> Self {
        let w = view.len();
        Self {
            view,
            release,
            worker_ft,
            assigned: vec![None; tasks],
            finish: vec![0.0; tasks],
            pending_models: vec![0; w],
            pending_bytes: vec![0; w],
        }
    }
}

/// Fetch-time estimate for running `task` on the worker described by `row`.
///
/// `pending` and `pending_bytes` are fetches already committed for that worker
/// but not yet visible in the row. `penalty` of `None` means evictions are free.
pub(crate) fn fetch_estimate(
    task: &TaskSpec,
    row: &SstRow,
    pending: u64,
    pending_bytes: u64,
    env: &Env<'_>,
    penalty: Option<PenaltyMode>,
) -> f64 {
    let Some(m) = task.model else { return 0.0 };
    let bit = 1u64 << m;
    if (row.cache_bitmap | pending) & bit != 0 {
        return 0.0;
    }
    let size = env.catalog.model(m).size_bytes;
    let td = env.link.td_model_bytes(size);
    match penalty {
        Some(p) if size > row.available_cache.saturating_sub(pending_bytes) => td + p.penalty(td),
        _ => td,
    }
}

/// `TD_model(t, w)`: 0 if resident or already being fetched by this pass,
/// the PCIe transfer time if it fits in free cache, plus the eviction penalty
/// otherwise. Always 0 with model locality disabled.
pub fn model_fetch_time(
    task: &TaskSpec,
    w: WorkerId,
    ctx: &PlanContext<'_>,
    env: &Env<'_>,
    cfg: &SchedulerConfig,
) -> f64 {
    if !cfg.model_locality {
        return 0.0;
    }
    let row = ctx.view.row(w);
    fetch_estimate(task, row, ctx.pending_models[w], ctx.pending_bytes[w], env, Some(cfg.penalty))
}

/// Time all inputs of task `t` would be on worker `w`: each predecessor's
/// planned finish, plus its output transfer when it runs elsewhere.
pub fn at_all_inputs(
    dfg: &Dfg,
    t: usize,
    w: WorkerId,
    ctx: &PlanContext<'_>,
    env: &Env<'_>,
) -> Result<f64> {
    let preds = dfg.preds(t);
    if preds.is_empty() {
        return Ok(ctx.release);
    }
    let mut at = f64::NEG_INFINITY;
    for &p in preds {
        let Some(pw) = ctx.assigned[p] else {
            return Err(Error::PredecessorUnassigned {
                task: dfg.task(t).id.clone(),
                pred: dfg.task(p).id.clone(),
            });
        };
        let transfer = if pw == w { 0.0 } else { env.link.td_output(dfg.task(p)) };
        at = at.max(ctx.finish[p] + transfer);
    }
    Ok(at)
}

fn greedy(
    job: JobId,
    dfg: &Dfg,
    ranks: &[f64],
    ctx: &mut PlanContext<'_>,
    env: &Env<'_>,
    cfg: Option<&SchedulerConfig>,
) -> Result<Adfg> {
    let mut scores = vec![0.0; env.workers];
    for t in rank_order(ranks) {
        let task = dfg.task(t);
        for (w, score) in scores.iter_mut().enumerate() {
            let at = at_all_inputs(dfg, t, w, ctx, env)?;
            let fetch = cfg.map_or(0.0, |c| model_fetch_time(task, w, ctx, env, c));
            *score = ctx.worker_ft[w].max(at) + fetch + env.runtime(task, w);
        }
        let (w, ft) = argmin(scores.iter().copied());
        ctx.worker_ft[w] = ft;
        ctx.finish[t] = ft;
        ctx.assigned[t] = Some(w);
        if let (Some(m), Some(c)) = (task.model, cfg) {
            let bit = 1u64 << m;
            let row = ctx.view.row(w);
            if c.model_locality && (row.cache_bitmap | ctx.pending_models[w]) & bit == 0 {
                ctx.pending_models[w] |= bit;
                ctx.pending_bytes[w] += env.catalog.model(m).size_bytes;
            }
        }
    }
    Ok(Adfg {
        job_id: job,
        assignment: ctx.assigned.iter().map(|a| a.expect("every task visited")).collect(),
        est_finish: ctx.finish.clone(),
    })
}

/// Rank-ordered greedy placement: each task goes to the worker minimizing
/// `max(worker FT, inputs ready) + TD_model + R`.
pub fn plan_job(
    job: JobId,
    dfg: &Dfg,
    ranks: &[f64],
    ctx: &mut PlanContext<'_>,
    env: &Env<'_>,
    cfg: &SchedulerConfig,
) -> Result<Adfg> {
    greedy(job, dfg, ranks, ctx, env, Some(cfg))
}

/// HEFT: the same greedy with every worker assumed idle and model fetches
/// ignored. Build `ctx` with [`PlanContext::idle`].
pub fn heft_plan(
    job: JobId,
    dfg: &Dfg,
    ranks: &[f64],
    ctx: &mut PlanContext<'_>,
    env: &Env<'_>,
) -> Result<Adfg> {
    greedy(job, dfg, ranks, ctx, env, None)
}
