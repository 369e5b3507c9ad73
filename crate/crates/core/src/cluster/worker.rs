//! Simulated worker: a serial execution queue in front of one GPU cache.

use crate::cost::{secs_to_us, us_to_secs};
use crate::cluster::cache::{EvictionPolicy, GpuCache};
use crate::error::Result;
use crate::workflow::{Catalog, JobId, ModelId, WorkerId};

/// A task waiting on a worker's execution queue.
#[derive(Debug, Clone, PartialEq)]
pub struct QueuedTask {
    pub job: JobId,
    pub dfg: usize,
    pub task: usize,
    pub model: Option<ModelId>,
    /// `R(t, w)` as the scheduler estimates it.
    pub expected_s: f64,
    /// Realized execution time.
    pub duration_us: u64,
    pub inputs_pending: usize,
    /// A fetch was issued on this task's behalf.
    pub fetch_requested: bool,
}

impl QueuedTask {
    pub fn inputs_ready(&self) -> bool {
        self.inputs_pending == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Running {
    pub task: QueuedTask,
    pub started_us: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fetch {
    pub model: ModelId,
    pub done_us: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkerCounters {
    pub tasks_executed: u64,
    pub busy_us: u64,
}

/// What a dispatch pass decided. The caller turns these into events.
#[derive(Debug, Default, PartialEq)]
pub struct Dispatch {
    pub started: bool,
    /// Fetch issued this pass and the models it evicted.
    pub fetch: Option<(Fetch, Vec<ModelId>)>,
    /// `dfg` of the task the fetch was issued for.
    pub fetch_dfg: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct WorkerState {
    pub id: WorkerId,
    pub queue: Vec<QueuedTask>,
    pub running: Option<Running>,
    pub fetching: Option<Fetch>,
    /// Fetched models whose requesting task has not started yet.
    pub awaiting: Vec<ModelId>,
    pub cache: GpuCache,
    pub counters: WorkerCounters,
}

impl WorkerState {
    pub fn new(id: WorkerId, gpu_capacity: u64) -> Self {
        Self {
            id,
            queue: Vec::new(),
            running: None,
            fetching: None,
            awaiting: Vec::new(),
            cache: GpuCache::new(gpu_capacity),
            counters: WorkerCounters::default(),
        }
    }

    /// `FT(w)`: `now` plus the expected remainder of the running task plus the
    /// expected runtime of everything queued.
    pub fn estimate_ft(&self, now_s: f64) -> f64 {
        let in_flight = self.running.as_ref().map_or(0.0, |r| {
            (us_to_secs(r.started_us) + r.task.expected_s - now_s).max(0.0)
        });
        now_s + in_flight + self.queue.iter().map(|t| t.expected_s).sum::<f64>()
    }

    pub fn is_idle(&self) -> bool {
        self.running.is_none() && self.queue.is_empty() && self.fetching.is_none()
    }

    /// Models that may not be evicted: the running task's and those fetched
    /// for tasks that have not started.
    pub fn pinned(&self) -> u64 {
        let run = self.running.as_ref().and_then(|r| r.task.model);
        run.into_iter().chain(self.awaiting.iter().copied()).fold(0, |b, m| b | 1 << m)
    }

    /// Models referenced by the queue, in queue order.
    pub fn queued_models(&self) -> Vec<ModelId> {
        self.queue.iter().filter_map(|t| t.model).collect()
    }

    pub fn find_queued(&self, job: JobId, task: usize) -> Option<usize> {
        self.queue.iter().position(|t| t.job == job && t.task == task)
    }

    /// One pass of the task dispatcher at `now_us`.
    ///
    /// If the GPU is free, the first queued task whose inputs have arrived and
    /// whose model is resident starts; blocked tasks are skipped. Then, if no
    /// fetch is in flight, a fetch begins for the first input-ready task whose
    /// model is missing. The started task is placed in `running`; the caller
    /// schedules its completion.
    pub fn dispatch(
        &mut self,
        now_us: u64,
        catalog: &Catalog,
        policy: EvictionPolicy,
        pcie_secs: impl Fn(u64) -> f64,
    ) -> Result<Dispatch> {
        let mut out = Dispatch::default();
        if self.running.is_none() {
            let runnable = self.queue.iter().position(|t| {
                t.inputs_ready() && t.model.is_none_or(|m| self.cache.is_resident(m))
            });
            if let Some(i) = runnable {
                let task = self.queue.remove(i);
                if let Some(m) = task.model {
                    if let Some(k) = self.awaiting.iter().position(|&a| a == m) {
                        self.awaiting.remove(k);
                    }
                    if !task.fetch_requested {
                        self.cache.record_hit();
                    }
                }
                self.running = Some(Running { task, started_us: now_us });
                out.started = true;
            }
        }
        if self.fetching.is_none() {
            let pinned = self.pinned();
            let queued = self.queued_models();
            for i in 0..self.queue.len() {
                let t = &self.queue[i];
                let Some(m) = t.model else { continue };
                if !t.inputs_ready() || self.cache.is_resident(m) {
                    continue;
                }
                let spec = catalog.model(m);
                if let Some(evicted) = self.cache.begin_fetch(spec, policy, &queued, pinned)? {
                    self.queue[i].fetch_requested = true;
                    let fetch = Fetch { model: m, done_us: now_us + secs_to_us(pcie_secs(spec.size_bytes)) };
                    self.fetching = Some(fetch);
                    out.fetch = Some((fetch, evicted));
                    out.fetch_dfg = Some(self.queue[i].dfg);
                    break;
                }
            }
        }
        Ok(out)
    }

    pub fn complete_fetch(&mut self, now_us: u64) -> ModelId {
        let f = self.fetching.take().expect("fetch in flight");
        self.cache.complete_fetch(f.model, now_us);
        self.awaiting.push(f.model);
        f.model
    }

    pub fn complete_task(&mut self) -> Running {
        let r = self.running.take().expect("task running");
        self.counters.tasks_executed += 1;
        self.counters.busy_us += r.task.duration_us;
        r
    }
}
