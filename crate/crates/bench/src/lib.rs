//! Fixtures shared by the benchmarks.

use dagsched_core::monitor::{SstRow, SstView};
use dagsched_core::{SchedulerKind, SimConfig};

/// A view where every worker has some backlog and a different cached model.
pub fn loaded_view(workers: usize, now: f64) -> SstView {
    let rows = (0..workers)
        .map(|w| SstRow {
            worker: w,
            queue_finish_time: now + (w % 7) as f64 * 0.3,
            cache_bitmap: 1 << (w % 8),
            available_cache: 8 << 30,
            publish_time: now,
            cache_publish_time: now,
        })
        .collect();
    SstView { rows }
}

/// Poisson workload of `jobs` jobs at `rate` on `workers` workers.
pub fn sim_config(kind: SchedulerKind, workers: usize, rate: f64, jobs: usize) -> SimConfig {
    let mut c = SimConfig::default().with_kind(kind);
    c.cluster.workers = workers;
    c.workload.rate = rate;
    c.workload.jobs = Some(jobs);
    c.workload.duration_s = 1e9;
    c.audit = false;
    c
}
