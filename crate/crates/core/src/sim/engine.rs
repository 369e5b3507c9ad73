//! Discrete-event loop.
//!
//! A job is planned when it arrives, on its origin worker's view of the state
//! table. Its entry task receives the job input once planning finishes. A task
//! joins its worker's execution queue when its first input arrives and runs
//! once every input is there and its model is resident. When a task finishes,
//! each successor's placement may be revisited and the output is shipped to it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::audit::{audit_trace, AuditReport, TraceEvent};
use super::config::SimConfig;
use super::event::{EventKind, EventQueue};
use super::runtime::sample_runtime;
use crate::cluster::{CacheStats, QueuedTask, WorkerState};
use crate::cost::{secs_to_us, us_to_secs};
use crate::error::{Error, Result};
use crate::metrics::{slow_down_factor, JobRecord, WorkerRecord};
use crate::monitor::{SstIntervals, SstView, StateMonitor};
use crate::sched::{
    adjust_task, hash_assign, heft_plan, jit_assign, plan_job, Env, PlanContext, SchedulerKind,
};
use crate::workflow::{compute_ranks, Catalog, Dfg, JobId, JobInstance, WorkerId};
use crate::workload::load_jobs;

/// RNG streams derived from the seed. Arrivals and runtimes draw from separate
/// streams so every scheduler sees the same jobs with the same runtimes.
const ARRIVAL_STREAM: u64 = 1;
const RUNTIME_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub jobs: Vec<JobRecord>,
    pub workers: Vec<WorkerRecord>,
    /// Cache activity attributed to the DFG of the task that caused it.
    pub dfg_cache: Vec<(String, CacheStats)>,
    /// Time of the last job completion, seconds.
    pub duration_s: f64,
    pub jobs_submitted: usize,
    /// Successor placements changed by dynamic adjustment.
    pub reassignments: u64,
    pub sst_load_publications: u64,
    pub sst_cache_publications: u64,
    pub seed: u64,
    pub config_hash: String,
    pub canonical_config: String,
    pub audit: AuditReport,
}

pub fn arrival_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ARRIVAL_STREAM);
    rng
}

/// Validates `config`, builds its workload and runs it.
pub fn run_simulation(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let catalog = config.catalog()?;
    let jobs = load_jobs(&config.workload, &catalog, &mut arrival_rng(config.seed))?;
    simulate(config, &catalog, &jobs)
}

/// Runs an explicit job list. Origin workers are reassigned round-robin.
pub fn simulate(config: &SimConfig, catalog: &Catalog, jobs: &[JobInstance]) -> Result<SimResult> {
    config.validate()?;
    let cap = config.cluster.gpu_capacity_bytes;
    if let Some(m) = catalog.models().iter().find(|m| m.size_bytes > cap) {
        return Err(Error::ModelTooLarge { size: m.size_bytes, capacity: cap });
    }
    let mut job_dfgs = Vec::with_capacity(jobs.len());
    for j in jobs {
        job_dfgs.push(catalog.dfg_index(&j.dfg_id).ok_or_else(|| Error::UnknownDfg(j.dfg_id.clone()))?);
    }
    let mut sim = Sim::new(config, catalog, jobs, &job_dfgs);
    sim.run()?;
    Ok(sim.finish(&job_dfgs))
}

struct JobRun {
    dfg: usize,
    arrival_us: u64,
    origin: WorkerId,
    assignment: Vec<WorkerId>,
    /// Realized runtime on a reference-speed worker.
    base_s: Vec<f64>,
    lower_bound_us: u64,
    /// Predecessors finished, per task.
    produced: Vec<usize>,
    ran_on: Vec<WorkerId>,
    enqueued: Vec<bool>,
    completion_us: Option<u64>,
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    catalog: &'a Catalog,
    ranks: Vec<Vec<f64>>,
    workers: Vec<WorkerState>,
    monitor: StateMonitor,
    events: EventQueue,
    now: u64,
    jobs: Vec<JobRun>,
    instances: &'a [JobInstance],
    runtime_rng: ChaCha8Rng,
    trace: Option<Vec<TraceEvent>>,
    dfg_cache: Vec<CacheStats>,
    pending_jobs: usize,
    reassignments: u64,
    hit_horizon: bool,
    min_multiplier: f64,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a SimConfig, catalog: &'a Catalog, instances: &'a [JobInstance], job_dfgs: &[usize]) -> Self {
        let n = cfg.cluster.workers;
        let workers: Vec<WorkerState> =
            (0..n).map(|w| WorkerState::new(w, cfg.cluster.gpu_capacity_bytes)).collect();
        let intervals = SstIntervals {
            load_us: secs_to_us(cfg.sst_load_interval_s),
            cache_us: secs_to_us(cfg.sst_cache_interval_s),
        };
        let monitor = StateMonitor::new(&workers, intervals, false);
        let ranks = catalog
            .dfgs()
            .iter()
            .map(|d| compute_ranks(d, &cfg.cluster.runtimes, n, &cfg.cluster.link))
            .collect();
        let mut runtime_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        runtime_rng.set_stream(RUNTIME_STREAM);
        let min_multiplier =
            (0..n).map(|w| cfg.cluster.runtimes.multiplier(w)).fold(f64::INFINITY, f64::min);

        let mut events = EventQueue::default();
        let mut jobs = Vec::with_capacity(instances.len());
        for (i, (inst, &dfg)) in instances.iter().zip(job_dfgs).enumerate() {
            let len = catalog.dfgs()[dfg].len();
            let arrival_us = secs_to_us(inst.arrival_s);
            jobs.push(JobRun {
                dfg,
                arrival_us,
                origin: i % n,
                assignment: vec![0; len],
                base_s: Vec::new(),
                lower_bound_us: 0,
                produced: vec![0; len],
                ran_on: vec![0; len],
                enqueued: vec![false; len],
                completion_us: None,
            });
            events.push(arrival_us, EventKind::JobArrival { job: i });
        }
        let (li, ci) = (intervals.load_us, intervals.cache_us);
        if li > 0 && li == ci {
            events.push(li, EventKind::SstPublish { load: true, cache: true });
        } else {
            if li > 0 {
                events.push(li, EventKind::SstPublish { load: true, cache: false });
            }
            if ci > 0 {
                events.push(ci, EventKind::SstPublish { load: false, cache: true });
            }
        }
        if let Some(h) = cfg.horizon_s {
            events.push(secs_to_us(h), EventKind::SimEnd);
        }
        Self {
            cfg,
            catalog,
            ranks,
            workers,
            monitor,
            events,
            now: 0,
            pending_jobs: jobs.len(),
            jobs,
            instances,
            runtime_rng,
            trace: cfg.audit.then(Vec::new),
            dfg_cache: vec![CacheStats::default(); catalog.dfgs().len()],
            reassignments: 0,
            hit_horizon: false,
            min_multiplier,
        }
    }

    fn env(&self) -> Env<'a> {
        Env {
            catalog: self.catalog,
            runtimes: &self.cfg.cluster.runtimes,
            link: &self.cfg.cluster.link,
            workers: self.cfg.cluster.workers,
        }
    }

    fn dfg(&self, job: usize) -> &'a Dfg {
        &self.catalog.dfgs()[self.jobs[job].dfg]
    }

    fn record(&mut self, ev: TraceEvent) {
        if let Some(t) = &mut self.trace {
            t.push(ev);
        }
    }

    fn view(&self, observer: WorkerId) -> SstView {
        self.monitor.view(&self.workers, self.now, Some(observer))
    }

    fn duration_us(&self, job: usize, task: usize, w: WorkerId) -> u64 {
        secs_to_us(self.jobs[job].base_s[task] * self.cfg.cluster.runtimes.multiplier(w)).max(1)
    }

    fn run(&mut self) -> Result<()> {
        while let Some(ev) = self.events.pop() {
            self.now = ev.time_us;
            match ev.kind {
                EventKind::JobArrival { job } => self.on_arrival(job)?,
                EventKind::PlanComplete { job } => self.on_plan_complete(job),
                EventKind::InputArrival { job, task, worker } => self.on_input(job, task, worker)?,
                EventKind::FetchComplete { worker } => {
                    let model = self.workers[worker].complete_fetch(self.now);
                    self.record(TraceEvent::FetchDone { time_us: self.now, worker, model });
                    self.pump(worker)?;
                }
                EventKind::TaskComplete { worker } => self.on_task_complete(worker)?,
                EventKind::SstPublish { load, cache } => self.on_publish(load, cache),
                EventKind::SimEnd => {
                    self.hit_horizon = true;
                    break;
                }
            }
        }
        Ok(())
    }

    fn on_arrival(&mut self, job: usize) -> Result<()> {
        let dfg = self.dfg(job);
        let base: Vec<f64> = dfg
            .tasks()
            .iter()
            .map(|t| sample_runtime(t, self.cfg.noise, &mut self.runtime_rng))
            .collect();
        let best: Vec<u64> =
            base.iter().map(|&b| secs_to_us(b * self.min_multiplier).max(1)).collect();
        self.jobs[job].lower_bound_us = dfg.critical_path(&best);
        self.jobs[job].base_s = base;

        let env = self.env();
        let now_s = us_to_secs(self.now);
        let plan_us = secs_to_us(self.cfg.plan_cost_s);
        let release = us_to_secs(self.now + plan_us);
        let origin = self.jobs[job].origin;
        let ranks = &self.ranks[self.jobs[job].dfg];
        let job_id = job as JobId;
        let assignment = match self.cfg.scheduler.kind {
            SchedulerKind::Compass => {
                let view = self.view(origin);
                let mut ctx = PlanContext::new(&view, now_s, release, dfg.len());
                plan_job(job_id, dfg, ranks, &mut ctx, &env, &self.cfg.scheduler)?.assignment
            }
            SchedulerKind::Heft => {
                let view = self.view(origin);
                let mut ctx = PlanContext::idle(&view, now_s, release, dfg.len());
                heft_plan(job_id, dfg, ranks, &mut ctx, &env)?.assignment
            }
            SchedulerKind::Hash => {
                dfg.tasks().iter().map(|t| hash_assign(&t.id, job_id, env.workers)).collect()
            }
            // Placed task by task as inputs become ready.
            SchedulerKind::Jit => vec![0; dfg.len()],
        };
        self.jobs[job].assignment = assignment;
        self.events.push(self.now + plan_us, EventKind::PlanComplete { job });
        Ok(())
    }

    fn on_plan_complete(&mut self, job: usize) {
        let dfg = self.dfg(job);
        let entry = dfg.entry();
        if self.cfg.scheduler.kind == SchedulerKind::Jit {
            let view = self.view(self.jobs[job].origin);
            let w = jit_assign(dfg, entry, &[], &view, us_to_secs(self.now), &self.env());
            self.jobs[job].assignment[entry] = w;
        }
        let worker = self.jobs[job].assignment[entry];
        self.events.push(self.now, EventKind::InputArrival { job, task: entry, worker });
    }

    fn on_input(&mut self, job: usize, task: usize, worker: WorkerId) -> Result<()> {
        self.record(TraceEvent::Input { time_us: self.now, job: job as JobId, task, worker });
        if self.jobs[job].enqueued[task] {
            let w = &mut self.workers[worker];
            let i = w.find_queued(job as JobId, task).expect("partially fed task is queued");
            w.queue[i].inputs_pending -= 1;
        } else {
            let dfg = self.dfg(job);
            let spec = dfg.task(task);
            let queued = QueuedTask {
                job: job as JobId,
                dfg: self.jobs[job].dfg,
                task,
                model: spec.model,
                expected_s: self.cfg.cluster.runtimes.runtime(spec, worker),
                duration_us: self.duration_us(job, task, worker),
                inputs_pending: dfg.preds(task).len().max(1) - 1,
                fetch_requested: false,
            };
            self.workers[worker].queue.push(queued);
            self.jobs[job].enqueued[task] = true;
        }
        self.pump(worker)
    }

    /// Lets `w` start a task and/or a fetch, and schedules the follow-ups.
    fn pump(&mut self, w: WorkerId) -> Result<()> {
        let link = self.cfg.cluster.link;
        let d = self.workers[w].dispatch(self.now, self.catalog, self.cfg.cluster.eviction, |b| {
            link.td_model_bytes(b)
        })?;
        if d.started {
            let r = self.workers[w].running.as_ref().expect("started");
            let (job, task, model, dfg) = (r.task.job, r.task.task, r.task.model, r.task.dfg);
            let done = self.now + r.task.duration_us;
            if model.is_some() && !r.task.fetch_requested {
                self.dfg_cache[dfg].hits += 1;
            }
            self.record(TraceEvent::Start { time_us: self.now, job, task, worker: w, model });
            self.events.push(done, EventKind::TaskComplete { worker: w });
        }
        if let Some((fetch, evicted)) = d.fetch {
            let stats = &mut self.dfg_cache[d.fetch_dfg.expect("fetch has a requester")];
            stats.misses += 1;
            stats.fetches += 1;
            stats.evictions += evicted.len() as u64;
            for model in evicted {
                self.record(TraceEvent::Evicted { time_us: self.now, worker: w, model });
            }
            self.events.push(fetch.done_us, EventKind::FetchComplete { worker: w });
        }
        Ok(())
    }

    fn on_task_complete(&mut self, w: WorkerId) -> Result<()> {
        let r = self.workers[w].complete_task();
        let (job, t) = (r.task.job as usize, r.task.task);
        self.record(TraceEvent::Complete { time_us: self.now, job: job as JobId, task: t, worker: w });
        self.jobs[job].ran_on[t] = w;
        let dfg = self.dfg(job);
        if t == dfg.exit() {
            self.jobs[job].completion_us = Some(self.now);
            self.pending_jobs -= 1;
        }
        let env = self.env();
        let now_s = us_to_secs(self.now);
        let sched = self.cfg.scheduler;
        let mut view: Option<SstView> = None;
        for &s in dfg.succs(t) {
            self.jobs[job].produced[s] += 1;
            match sched.kind {
                SchedulerKind::Jit => {
                    if self.jobs[job].produced[s] < dfg.preds(s).len() {
                        continue;
                    }
                    let v = view.get_or_insert_with(|| self.view(w));
                    let pred_workers: Vec<WorkerId> =
                        dfg.preds(s).iter().map(|&p| self.jobs[job].ran_on[p]).collect();
                    let ws = jit_assign(dfg, s, &pred_workers, v, now_s, &env);
                    self.jobs[job].assignment[s] = ws;
                    for (&p, &pw) in dfg.preds(s).iter().zip(&pred_workers) {
                        self.send(job, p, s, pw, ws);
                    }
                }
                SchedulerKind::Compass if sched.dynamic_adjustment => {
                    let planned = self.jobs[job].assignment[s];
                    if !dfg.is_join(s) {
                        let v = view.get_or_insert_with(|| self.view(w));
                        let ws = adjust_task(dfg, s, planned, w, v, now_s, &env, &sched);
                        if ws != planned {
                            self.reassignments += 1;
                            self.jobs[job].assignment[s] = ws;
                            self.record(TraceEvent::Reassigned {
                                time_us: self.now,
                                job: job as JobId,
                                task: s,
                                from: planned,
                                to: ws,
                            });
                        }
                    }
                    let ws = self.jobs[job].assignment[s];
                    self.send(job, t, s, w, ws);
                }
                _ => {
                    let ws = self.jobs[job].assignment[s];
                    self.send(job, t, s, w, ws);
                }
            }
        }
        self.pump(w)
    }

    /// Ships `from`'s output to successor `to` on worker `dst`.
    fn send(&mut self, job: usize, from: usize, to: usize, src: WorkerId, dst: WorkerId) {
        let delay = if src == dst {
            0
        } else {
            secs_to_us(self.cfg.cluster.link.td_output(self.dfg(job).task(from)))
        };
        self.events.push(self.now + delay, EventKind::InputArrival { job, task: to, worker: dst });
    }

    fn on_publish(&mut self, load: bool, cache: bool) {
        for w in &self.workers {
            self.monitor.publish_row(w, self.now, load, cache);
        }
        if self.pending_jobs == 0 {
            return;
        }
        let iv = self.monitor.intervals();
        let next = if load { iv.load_us } else { iv.cache_us };
        self.events.push(self.now + next, EventKind::SstPublish { load, cache });
    }

    fn finish(self, job_dfgs: &[usize]) -> SimResult {
        let mut records = Vec::new();
        let mut audit = match &self.trace {
            Some(t) => audit_trace(t, self.catalog, job_dfgs, !self.hit_horizon),
            None => AuditReport::default(),
        };
        let mut end_us = 0;
        for (i, j) in self.jobs.iter().enumerate() {
            let Some(done) = j.completion_us else { continue };
            end_us = end_us.max(done);
            let latency_us = done - j.arrival_us;
            let latency_s = us_to_secs(latency_us);
            let lower_bound_s = us_to_secs(j.lower_bound_us);
            let sdf = match slow_down_factor(latency_s, lower_bound_s) {
                Ok(x) => x,
                Err(e) => {
                    audit.violations.push(format!("job {i}: {e}"));
                    latency_s / lower_bound_s
                }
            };
            records.push(JobRecord {
                job_id: i as JobId,
                dfg_id: self.instances[i].dfg_id.clone(),
                arrival_s: us_to_secs(j.arrival_us),
                completion_s: us_to_secs(done),
                latency_s,
                lower_bound_s,
                slow_down_factor: sdf,
            });
        }
        let duration_s = us_to_secs(end_us);
        let workers = self
            .workers
            .iter()
            .map(|w| {
                let s = w.cache.stats();
                WorkerRecord {
                    worker: w.id,
                    tasks_executed: w.counters.tasks_executed,
                    busy_s: us_to_secs(w.counters.busy_us),
                    hits: s.hits,
                    misses: s.misses,
                    fetches: s.fetches,
                    evictions: s.evictions,
                }
            })
            .collect();
        SimResult {
            jobs: records,
            workers,
            dfg_cache: self
                .catalog
                .dfgs()
                .iter()
                .map(|d| d.id().to_string())
                .zip(self.dfg_cache.iter().copied())
                .collect(),
            duration_s,
            jobs_submitted: self.jobs.len(),
            reassignments: self.reassignments,
            sst_load_publications: self.monitor.load_publications(),
            sst_cache_publications: self.monitor.cache_publications(),
            seed: self.cfg.seed,
            config_hash: self.cfg.config_hash(),
            canonical_config: self.cfg.canonical(),
            audit,
        }
    }
}
