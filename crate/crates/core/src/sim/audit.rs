//! Post-run check of the event trace.

use std::collections::{HashMap, HashSet};

use crate::workflow::{Catalog, JobId, ModelId, WorkerId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    Input { time_us: u64, job: JobId, task: usize, worker: WorkerId },
    FetchDone { time_us: u64, worker: WorkerId, model: ModelId },
    Evicted { time_us: u64, worker: WorkerId, model: ModelId },
    Start { time_us: u64, job: JobId, task: usize, worker: WorkerId, model: Option<ModelId> },
    Complete { time_us: u64, job: JobId, task: usize, worker: WorkerId },
    Reassigned { time_us: u64, job: JobId, task: usize, from: WorkerId, to: WorkerId },
}

impl TraceEvent {
    pub fn time_us(&self) -> u64 {
        match *self {
            TraceEvent::Input { time_us, .. }
            | TraceEvent::FetchDone { time_us, .. }
            | TraceEvent::Evicted { time_us, .. }
            | TraceEvent::Start { time_us, .. }
            | TraceEvent::Complete { time_us, .. }
            | TraceEvent::Reassigned { time_us, .. } => time_us,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub events_checked: usize,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

const MAX_REPORTED: usize = 100;

/// Checks, independently of the engine's own bookkeeping, that
///
/// - time never goes backwards,
/// - every start has all its inputs on that worker and its model resident,
/// - a worker runs one task at a time,
/// - joins are never reassigned,
/// - each task starts and completes exactly once, and, if `drained`, every
///   task of every job completed.
///
/// `job_dfgs[j]` is the catalog index of job `j`'s DFG.
pub fn audit_trace(trace: &[TraceEvent], catalog: &Catalog, job_dfgs: &[usize], drained: bool) -> AuditReport {
    let mut report = AuditReport { events_checked: trace.len(), violations: Vec::new() };
    let mut flag = |msg: String| {
        if report.violations.len() < MAX_REPORTED {
            report.violations.push(msg);
        }
    };
    let dfg_of = |job: JobId| &catalog.dfgs()[job_dfgs[job as usize]];

    let mut inputs: HashMap<(JobId, usize, WorkerId), usize> = HashMap::new();
    let mut resident: HashMap<WorkerId, HashSet<ModelId>> = HashMap::new();
    let mut running: HashMap<WorkerId, (JobId, usize)> = HashMap::new();
    let mut started: HashSet<(JobId, usize)> = HashSet::new();
    let mut completed: HashSet<(JobId, usize)> = HashSet::new();
    let mut last = 0;

    for ev in trace {
        let t = ev.time_us();
        if t < last {
            flag(format!("time went backwards at {t} us"));
        }
        last = t;
        match *ev {
            TraceEvent::Input { job, task, worker, .. } => {
                *inputs.entry((job, task, worker)).or_default() += 1;
            }
            TraceEvent::FetchDone { worker, model, .. } => {
                resident.entry(worker).or_default().insert(model);
            }
            TraceEvent::Evicted { worker, model, .. } => {
                resident.entry(worker).or_default().remove(&model);
            }
            TraceEvent::Start { job, task, worker, model, .. } => {
                let need = dfg_of(job).preds(task).len().max(1);
                let have = inputs.get(&(job, task, worker)).copied().unwrap_or(0);
                if have != need {
                    flag(format!("job {job} task {task} started on worker {worker} at {t} us with {have}/{need} inputs"));
                }
                if let Some(m) = model {
                    if !resident.get(&worker).is_some_and(|r| r.contains(&m)) {
                        flag(format!("job {job} task {task} started on worker {worker} at {t} us without model {m}"));
                    }
                }
                if let Some(&(oj, ot)) = running.get(&worker) {
                    flag(format!("worker {worker} started job {job} task {task} at {t} us while running job {oj} task {ot}"));
                }
                running.insert(worker, (job, task));
                if !started.insert((job, task)) {
                    flag(format!("job {job} task {task} started twice"));
                }
            }
            TraceEvent::Complete { job, task, worker, .. } => {
                if running.remove(&worker) != Some((job, task)) {
                    flag(format!("worker {worker} completed job {job} task {task} it was not running"));
                }
                if !completed.insert((job, task)) {
                    flag(format!("job {job} task {task} completed twice"));
                }
            }
            TraceEvent::Reassigned { job, task, from, to, .. } => {
                if dfg_of(job).is_join(task) {
                    flag(format!("join task {task} of job {job} moved from worker {from} to {to}"));
                }
            }
        }
    }
    if drained {
        for (job, &d) in job_dfgs.iter().enumerate() {
            for task in 0..catalog.dfgs()[d].len() {
                if !completed.contains(&(job as JobId, task)) {
                    flag(format!("job {job} task {task} never completed"));
                }
            }
        }
    }
    report
}
