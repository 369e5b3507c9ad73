use crate::workflow::{JobId, WorkerId};

/// FNV-1a followed by the murmur3 64-bit finalizer. Stable across platforms
/// and releases, unlike `std`'s `DefaultHasher`.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^ (h >> 33)
}

/// Worker for `task_id` of job `job_id`: hash of the concatenated names.
pub fn hash_assign(task_id: &str, job_id: JobId, workers: usize) -> WorkerId {
    let key = format!("{task_id}{job_id}");
    (stable_hash(key.as_bytes()) % workers as u64) as WorkerId
}
