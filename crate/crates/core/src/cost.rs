//! Transfer and model-fetch duration estimates.
//!
//! Network transfers use a single cluster-wide capacity (full bisection);
//! host-to-GPU fetches use the per-worker PCIe link. Both follow the usual
//! `size / bandwidth + fixed latency` heuristic.

use crate::workflow::{ModelSpec, TaskSpec};

/// Link parameters shared by every worker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// Bytes per second between any two workers.
    pub network_bandwidth_bps: f64,
    /// Fixed per-transfer network latency, seconds.
    pub delta_network_s: f64,
    /// Host-to-GPU bytes per second.
    pub pcie_bandwidth_bps: f64,
    /// Fixed per-fetch overhead, seconds (includes model decompression).
    pub delta_pcie_s: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            // 100 Gbps RDMA fabric.
            network_bandwidth_bps: 12.5e9,
            delta_network_s: 0.001,
            // Effective host-to-GPU load rate including framework deserialization.
            pcie_bandwidth_bps: 4.0e9,
            delta_pcie_s: 0.1,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.network_bandwidth_bps > 0.0) || !(self.pcie_bandwidth_bps > 0.0) {
            return Err("bandwidths must be positive".into());
        }
        if !(self.delta_network_s >= 0.0) || !(self.delta_pcie_s >= 0.0) {
            return Err("latency constants must be non-negative".into());
        }
        Ok(())
    }

    /// Network transfer duration of `size` bytes between two distinct workers.
    ///
    /// Co-location is the caller's concern: transfers on the same worker cost 0
    /// and should not call this.
    pub fn td_input(&self, size: u64) -> f64 {
        size as f64 / self.network_bandwidth_bps + self.delta_network_s
    }

    /// Duration to move a task's output to a worker other than its producer.
    pub fn td_output(&self, task: &TaskSpec) -> f64 {
        self.td_input(task.output_bytes)
    }

    /// Host-to-GPU fetch duration for `model`.
    pub fn td_model(&self, model: &ModelSpec) -> f64 {
        self.td_model_bytes(model.size_bytes)
    }

    pub fn td_model_bytes(&self, size: u64) -> f64 {
        size as f64 / self.pcie_bandwidth_bps + self.delta_pcie_s
    }
}

/// Converts seconds to the simulator's integer-microsecond clock, rounding to nearest.
pub fn secs_to_us(s: f64) -> u64 {
    debug_assert!(s >= 0.0 && s.is_finite());
    (s * 1e6).round() as u64
}

pub fn us_to_secs(us: u64) -> f64 {
    us as f64 / 1e6
}
