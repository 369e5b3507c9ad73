//! Worker and GPU-cache models.

pub mod cache;
pub mod worker;

pub use cache::{
    bitmap_decode, bitmap_encode, evict_order_lookahead, Admission, CacheStats, EvictionPolicy,
    GpuCache, Resident,
};
pub use worker::{Dispatch, Fetch, QueuedTask, Running, WorkerCounters, WorkerState};
