//! Simulated global state monitor.
//!
//! Every worker periodically publishes one row: its queue finish-time estimate,
//! its cache bitmap and its free cache bytes. Schedulers read a view made of the
//! latest published rows, so what they see is at most one publish interval old.
//! Load and cache fields can be published on different intervals. Publication is
//! instantaneous on a fixed grid; a worker always sees its own row live.

use crate::cluster::WorkerState;
use crate::cost::us_to_secs;
use crate::workflow::WorkerId;

/// One worker's disseminated state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SstRow {
    pub worker: WorkerId,
    /// Published `FT(w)`, absolute seconds.
    pub queue_finish_time: f64,
    pub cache_bitmap: u64,
    /// Published `AVC(w)`, bytes.
    pub available_cache: u64,
    /// When the load fields were published.
    pub publish_time: f64,
    /// When the cache fields were published.
    pub cache_publish_time: f64,
}

impl SstRow {
    pub const ENCODED_LEN: usize = 44;

    /// Live row for `worker` at `now`.
    pub fn live(worker: &WorkerState, now_s: f64) -> Self {
        Self {
            worker: worker.id,
            queue_finish_time: worker.estimate_ft(now_s),
            cache_bitmap: worker.cache.bitmap(),
            available_cache: worker.cache.available(),
            publish_time: now_s,
            cache_publish_time: now_s,
        }
    }

    /// Little-endian fixed layout; fits one 64-byte cache line.
    pub fn encode(&self) -> [u8; Self::ENCODED_LEN] {
        let mut b = [0u8; Self::ENCODED_LEN];
        b[0..4].copy_from_slice(&(self.worker as u32).to_le_bytes());
        b[4..12].copy_from_slice(&self.queue_finish_time.to_le_bytes());
        b[12..20].copy_from_slice(&self.cache_bitmap.to_le_bytes());
        b[20..28].copy_from_slice(&self.available_cache.to_le_bytes());
        b[28..36].copy_from_slice(&self.publish_time.to_le_bytes());
        b[36..44].copy_from_slice(&self.cache_publish_time.to_le_bytes());
        b
    }

    pub fn decode(b: &[u8; Self::ENCODED_LEN]) -> Self {
        let u64_at = |i: usize| u64::from_le_bytes(b[i..i + 8].try_into().unwrap());
        Self {
            worker: u32::from_le_bytes(b[0..4].try_into().unwrap()) as WorkerId,
            queue_finish_time: f64::from_bits(u64_at(4)),
            cache_bitmap: u64_at(12),
            available_cache: u64_at(20),
            publish_time: f64::from_bits(u64_at(28)),
            cache_publish_time: f64::from_bits(u64_at(36)),
        }
    }
}

/// Snapshot of the cluster as one worker sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct SstView {
    pub rows: Vec<SstRow>,
}

impl SstView {
    pub fn row(&self, w: WorkerId) -> &SstRow {
        &self.rows[w]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Perfect-information view.
    pub fn live(workers: &[WorkerState], now_s: f64) -> Self {
        Self { rows: workers.iter().map(|w| SstRow::live(w, now_s)).collect() }
    }
}

/// Publication intervals in microseconds; 0 means the field is read live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SstIntervals {
    pub load_us: u64,
    pub cache_us: u64,
}

/// Start of the publish grid cell containing `now`.
pub fn last_publish_us(now_us: u64, interval_us: u64) -> u64 {
    if interval_us == 0 {
        now_us
    } else {
        now_us / interval_us * interval_us
    }
}

#[derive(Debug, Clone)]
pub struct StateMonitor {
    intervals: SstIntervals,
    published: Vec<SstRow>,
    history: Option<Vec<SstRow>>,
    load_publications: u64,
    cache_publications: u64,
}

impl StateMonitor {
    /// Seeds every row from the workers' initial state at time 0.
    pub fn new(workers: &[WorkerState], intervals: SstIntervals, record_history: bool) -> Self {
        Self {
            intervals,
            published: workers.iter().map(|w| SstRow::live(w, 0.0)).collect(),
            history: record_history.then(Vec::new),
            load_publications: 0,
            cache_publications: 0,
        }
    }

    pub fn intervals(&self) -> SstIntervals {
        self.intervals
    }

    /// Publishes the requested field groups for `worker` and returns its row.
    pub fn publish_row(&mut self, worker: &WorkerState, now_us: u64, load: bool, cache: bool) -> SstRow {
        let now = us_to_secs(now_us);
        let live = SstRow::live(worker, now);
        let row = &mut self.published[worker.id];
        if load {
            debug_assert!(row.publish_time <= now);
            row.queue_finish_time = live.queue_finish_time;
            row.publish_time = now;
            self.load_publications += 1;
        }
        if cache {
            debug_assert!(row.cache_publish_time <= now);
            row.cache_bitmap = live.cache_bitmap;
            row.available_cache = live.available_cache;
            row.cache_publish_time = now;
            self.cache_publications += 1;
        }
        let row = *row;
        if let Some(h) = &mut self.history {
            h.push(row);
        }
        row
    }

    /// What `observer` sees at `now`: published rows, except fields with a
    /// zero interval and the observer's own row, which are live.
    pub fn view(&self, workers: &[WorkerState], now_us: u64, observer: Option<WorkerId>) -> SstView {
        let now = us_to_secs(now_us);
        let rows = workers
            .iter()
            .zip(&self.published)
            .map(|(w, p)| {
                let own = observer == Some(w.id);
                let mut row = *p;
                if own || self.intervals.load_us == 0 {
                    row.queue_finish_time = w.estimate_ft(now);
                    row.publish_time = now;
                }
                if own || self.intervals.cache_us == 0 {
                    row.cache_bitmap = w.cache.bitmap();
                    row.available_cache = w.cache.available();
                    row.cache_publish_time = now;
                }
                row
            })
            .collect();
        SstView { rows }
    }

    pub fn history(&self) -> &[SstRow] {
        self.history.as_deref().unwrap_or(&[])
    }

    pub fn load_publications(&self) -> u64 {
        self.load_publications
    }

    pub fn cache_publications(&self) -> u64 {
        self.cache_publications
    }
}
