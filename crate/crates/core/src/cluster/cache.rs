//! GPU model cache with FIFO and queue-lookahead eviction.

use crate::cost::LinkParams;
use crate::error::{Error, Result};
use crate::workflow::{ModelId, ModelSpec, MAX_MODELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvictionPolicy {
    /// Evict in admission order.
    Fifo,
    /// Protect models needed by the next `window` queued tasks.
    Lookahead { window: usize },
}

impl Default for EvictionPolicy {
    fn default() -> Self {
        EvictionPolicy::Lookahead { window: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resident {
    pub model: ModelId,
    pub size: u64,
    pub admitted_us: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub fetches: u64,
    pub evictions: u64,
}

impl CacheStats {
    pub fn hit_rate(&self) -> f64 {
        let total = self.hits + self.misses;
        if total == 0 {
            1.0
        } else {
            self.hits as f64 / total as f64
        }
    }
}

/// Outcome of a synchronous admission.
#[derive(Debug, Clone, PartialEq)]
pub struct Admission {
    pub evicted: Vec<ModelId>,
    pub fetch_s: f64,
}

/// Resident models in admission order plus in-flight reservations.
#[derive(Debug, Clone)]
pub struct GpuCache {
    capacity: u64,
    resident: Vec<Resident>,
    inflight: Vec<(ModelId, u64)>,
    stats: CacheStats,
}

impl GpuCache {
    pub fn new(capacity: u64) -> Self {
        Self { capacity, resident: Vec::new(), inflight: Vec::new(), stats: CacheStats::default() }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    /// Bytes held by resident models and in-flight reservations.
    pub fn used(&self) -> u64 {
        self.resident.iter().map(|r| r.size).sum::<u64>()
            + self.inflight.iter().map(|&(_, s)| s).sum::<u64>()
    }

    /// Free bytes (AVC).
    pub fn available(&self) -> u64 {
        self.capacity - self.used()
    }

    pub fn resident(&self) -> &[Resident] {
        &self.resident
    }

    pub fn is_resident(&self, model: ModelId) -> bool {
        self.resident.iter().any(|r| r.model == model)
    }

    pub fn is_inflight(&self, model: ModelId) -> bool {
        self.inflight.iter().any(|&(m, _)| m == model)
    }

    pub fn bitmap(&self) -> u64 {
        self.resident.iter().fold(0, |b, r| b | 1u64 << r.model)
    }

    pub fn stats(&self) -> CacheStats {
        self.stats
    }

    pub fn record_hit(&mut self) {
        self.stats.hits += 1;
    }

    /// Eviction candidates, first-evicted first. Pinned models are never listed.
    pub fn eviction_order(&self, policy: EvictionPolicy, queued: &[ModelId], pinned: u64) -> Vec<ModelId> {
        match policy {
            EvictionPolicy::Fifo => self
                .resident
                .iter()
                .filter(|r| pinned & (1 << r.model) == 0)
                .map(|r| r.model)
                .collect(),
            EvictionPolicy::Lookahead { window } => {
                evict_order_lookahead(&self.resident, queued, window, pinned)
            }
        }
    }

    /// Evicts per `policy` until `model` fits, then reserves its bytes.
    ///
    /// Returns the evicted models, or `None` when pinned models leave too
    /// little room right now. Counts one miss and one fetch on success.
    pub fn begin_fetch(
        &mut self,
        model: &ModelSpec,
        policy: EvictionPolicy,
        queued: &[ModelId],
        pinned: u64,
    ) -> Result<Option<Vec<ModelId>>> {
        if model.size_bytes > self.capacity {
            return Err(Error::ModelTooLarge { size: model.size_bytes, capacity: self.capacity });
        }
        debug_assert!(!self.is_resident(model.id) && !self.is_inflight(model.id));
        let mut free = self.available();
        let mut victims = Vec::new();
        if free < model.size_bytes {
            for m in self.eviction_order(policy, queued, pinned) {
                free += self.resident.iter().find(|r| r.model == m).unwrap().size;
                victims.push(m);
                if free >= model.size_bytes {
                    break;
                }
            }
            if free < model.size_bytes {
                return Ok(None);
            }
        }
        self.resident.retain(|r| !victims.contains(&r.model));
        self.inflight.push((model.id, model.size_bytes));
        self.stats.misses += 1;
        self.stats.fetches += 1;
        self.stats.evictions += victims.len() as u64;
        Ok(Some(victims))
    }

    pub fn complete_fetch(&mut self, model: ModelId, now_us: u64) {
        let i = self.inflight.iter().position(|&(m, _)| m == model).expect("fetch in flight");
        let (_, size) = self.inflight.remove(i);
        self.resident.push(Resident { model, size, admitted_us: now_us });
    }

    /// Synchronous admission: a hit costs nothing, a miss evicts as needed and
    /// marks the model resident immediately.
    pub fn admit(
        &mut self,
        model: &ModelSpec,
        link: &LinkParams,
        policy: EvictionPolicy,
        queued: &[ModelId],
        pinned: u64,
        now_us: u64,
    ) -> Result<Admission> {
        if self.is_resident(model.id) {
            self.record_hit();
            return Ok(Admission { evicted: Vec::new(), fetch_s: 0.0 });
        }
        match self.begin_fetch(model, policy, queued, pinned)? {
            Some(evicted) => {
                self.complete_fetch(model.id, now_us);
                Ok(Admission { evicted, fetch_s: link.td_model(model) })
            }
            None => Err(Error::ModelTooLarge { size: model.size_bytes, capacity: self.available() }),
        }
    }
}

/// Queue-lookahead eviction order over `resident` (admission order).
///
/// Models absent from the first `window` queued entries go first, in admission
/// order. Models that are referenced follow, latest first use first, so the
/// model needed soonest is evicted last. Pinned models are excluded.
pub fn evict_order_lookahead(
    resident: &[Resident],
    queued: &[ModelId],
    window: usize,
    pinned: u64,
) -> Vec<ModelId> {
    let horizon = &queued[..window.min(queued.len())];
    let first_use = |m: ModelId| horizon.iter().position(|&q| q == m);
    let candidates = resident.iter().filter(|r| pinned & (1 << r.model) == 0);

    let mut order: Vec<ModelId> =
        candidates.clone().filter(|r| first_use(r.model).is_none()).map(|r| r.model).collect();
    let mut needed: Vec<(usize, ModelId)> =
        candidates.filter_map(|r| first_use(r.model).map(|p| (p, r.model))).collect();
    needed.sort_by_key(|e| std::cmp::Reverse(e.0));
    order.extend(needed.into_iter().map(|(_, m)| m));
    order
}

pub fn bitmap_encode<I: IntoIterator<Item = u32>>(ids: I) -> Result<u64> {
    ids.into_iter().try_fold(0u64, |bits, id| {
        if id >= MAX_MODELS {
            Err(Error::ModelIdOutOfRange(id))
        } else {
            Ok(bits | 1 << id)
        }
    })
}

pub fn bitmap_decode(bits: u64) -> Vec<ModelId> {
    (0..MAX_MODELS as u8).filter(|&i| bits & (1 << i) != 0).collect()
}
