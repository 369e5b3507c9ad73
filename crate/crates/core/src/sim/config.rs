//! Simulation configuration and its flat `key = value` text form.
//!
//! ```text
//! # comments and blank lines are ignored
//! cluster.worker_count = 5
//! scheduler.kind = compass
//! sst.load_interval_s = 0.2
//! workload.rate = 2
//! workload.mix = translation:0.5,dialogue:0.5
//! ```
//!
//! `compass.*` keys are accepted as aliases of `scheduler.*`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::cluster::EvictionPolicy;
use crate::cost::LinkParams;
use crate::dfg_file::{builtin_workflows, load_catalog};
use crate::error::{Error, Result};
use crate::sched::{PenaltyMode, SchedulerConfig, SchedulerKind};
use crate::sim::runtime::RuntimeNoise;
use crate::workflow::{Catalog, RuntimeModel};
use crate::workload::{WorkloadMode, WorkloadSpec};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    pub workers: usize,
    pub gpu_capacity_bytes: u64,
    pub link: LinkParams,
    pub eviction: EvictionPolicy,
    pub runtimes: RuntimeModel,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            workers: 5,
            gpu_capacity_bytes: 16 << 30,
            link: LinkParams::default(),
            eviction: EvictionPolicy::default(),
            runtimes: RuntimeModel::homogeneous(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub cluster: ClusterConfig,
    pub scheduler: SchedulerConfig,
    /// Publish interval of finish-time estimates; 0 means always fresh.
    pub sst_load_interval_s: f64,
    /// Publish interval of cache bitmap and free bytes; 0 means always fresh.
    pub sst_cache_interval_s: f64,
    pub workload: WorkloadSpec,
    /// Models and DFGs; the built-in set when absent.
    pub dfg_file: Option<PathBuf>,
    pub seed: u64,
    pub noise: RuntimeNoise,
    /// Simulated time spent planning each job.
    pub plan_cost_s: f64,
    /// Record an event trace and check it after the run.
    pub audit: bool,
    /// Stop the run at this time even if jobs are outstanding.
    pub horizon_s: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            cluster: ClusterConfig::default(),
            scheduler: SchedulerConfig::default(),
            sst_load_interval_s: 0.2,
            sst_cache_interval_s: 0.2,
            workload: WorkloadSpec::default(),
            dfg_file: None,
            seed: DEFAULT_SEED,
            noise: RuntimeNoise::Deterministic,
            plan_cost_s: 0.0,
            audit: true,
            horizon_s: None,
        }
    }
}

fn cfg_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), reason: reason.into() }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| cfg_err(key, format!("cannot parse `{v}`")))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = parse_num(key, v)?;
    if x.is_nan() {
        return Err(cfg_err(key, "NaN is not allowed"));
    }
    Ok(x)
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(cfg_err(key, format!("expected a boolean, got `{v}`"))),
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| parse_f64(key, x.trim())).collect()
}

impl SimConfig {
    /// Defaults overridden by the lines of `text`.
    pub fn parse_str(text: &str, origin: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text, origin)?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text, &path.display().to_string())
    }

    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: n + 1,
                    reason: format!("expected `key = value`, got `{line}`"),
                });
            };
            self.set(k.trim(), v.trim()).map_err(|e| Error::Parse {
                path: origin.to_string(),
                line: n + 1,
                reason: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Sets one key. Unknown keys and unparsable values are errors.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let canonical = match key.strip_prefix("compass.") {
            Some(rest) => format!("scheduler.{rest}"),
            None if key == "scheduler" => "scheduler.kind".to_string(),
            None => key.to_string(),
        };
        let k = canonical.as_str();
        let c = &mut self.cluster;
        let s = &mut self.scheduler;
        let w = &mut self.workload;
        match k {
            "cluster.worker_count" => c.workers = parse_num(k, v)?,
            "cluster.gpu_capacity_bytes" => c.gpu_capacity_bytes = parse_num(k, v)?,
            "cluster.network_bandwidth_Bps" => c.link.network_bandwidth_bps = parse_f64(k, v)?,
            "cluster.delta_network_s" => c.link.delta_network_s = parse_f64(k, v)?,
            "cluster.pcie_bandwidth_Bps" => c.link.pcie_bandwidth_bps = parse_f64(k, v)?,
            "cluster.delta_pcie_s" => c.link.delta_pcie_s = parse_f64(k, v)?,
            "cluster.eviction_policy" => {
                let window = match c.eviction {
                    EvictionPolicy::Lookahead { window } => window,
                    EvictionPolicy::Fifo => 10,
                };
                c.eviction = match v {
                    "fifo" => EvictionPolicy::Fifo,
                    "lookahead" => EvictionPolicy::Lookahead { window },
                    _ => return Err(cfg_err(k, format!("expected fifo or lookahead, got `{v}`"))),
                }
            }
            "cluster.lookahead_window" if v.is_empty() => {}
            "cluster.lookahead_window" => {
                let n: usize = parse_num(k, v)?;
                if let EvictionPolicy::Lookahead { window } = &mut c.eviction {
                    *window = n;
                }
            }
            "cluster.runtime_multipliers" => c.runtimes.multipliers = parse_list(k, v)?,
            "scheduler.kind" => s.kind = v.parse().map_err(|e: String| cfg_err(k, e))?,
            "scheduler.threshold" => s.threshold = parse_f64(k, v)?,
            "scheduler.dynamic_adjustment" => s.dynamic_adjustment = parse_bool(k, v)?,
            "scheduler.model_locality" => s.model_locality = parse_bool(k, v)?,
            "scheduler.eviction_penalty_mode" => {
                let value = match s.penalty {
                    PenaltyMode::Proportional(x) | PenaltyMode::Constant(x) => x,
                };
                s.penalty = match v {
                    "proportional" => PenaltyMode::Proportional(value),
                    "constant" => PenaltyMode::Constant(value),
                    _ => return Err(cfg_err(k, format!("expected proportional or constant, got `{v}`"))),
                }
            }
            "scheduler.eviction_penalty_value" => {
                let x = parse_f64(k, v)?;
                match &mut s.penalty {
                    PenaltyMode::Proportional(p) | PenaltyMode::Constant(p) => *p = x,
                }
            }
            "sst.interval_s" => {
                let x = parse_f64(k, v)?;
                self.sst_load_interval_s = x;
                self.sst_cache_interval_s = x;
            }
            "sst.load_interval_s" => self.sst_load_interval_s = parse_f64(k, v)?,
            "sst.cache_interval_s" => self.sst_cache_interval_s = parse_f64(k, v)?,
            "workload.mode" => {
                w.mode = match v {
                    "poisson" => WorkloadMode::Poisson,
                    "trace" => WorkloadMode::Trace,
                    _ => return Err(cfg_err(k, format!("expected poisson or trace, got `{v}`"))),
                }
            }
            "workload.rate" => w.rate = parse_f64(k, v)?,
            "workload.mix" => {
                w.mix.clear();
                if v != "uniform" && !v.is_empty() {
                    for part in v.split(',') {
                        let (id, wt) = part
                            .split_once(':')
                            .ok_or_else(|| cfg_err(k, format!("expected dfg:weight, got `{part}`")))?;
                        w.mix.push((id.trim().to_string(), parse_f64(k, wt.trim())?));
                    }
                }
            }
            "workload.duration_s" => w.duration_s = parse_f64(k, v)?,
            "workload.jobs" => {
                w.jobs = match v {
                    "" | "none" => None,
                    _ => Some(parse_num(k, v)?),
                }
            }
            "workload.trace_path" => w.trace_path = (!v.is_empty()).then(|| PathBuf::from(v)),
            "workload.rescale" => w.rescale = parse_f64(k, v)?,
            "workload.dfg_file" => self.dfg_file = (!v.is_empty()).then(|| PathBuf::from(v)),
            "sim.seed" => self.seed = parse_num(k, v)?,
            "sim.runtime_noise" => {
                self.noise = match v.split_once(':') {
                    None if v == "deterministic" => RuntimeNoise::Deterministic,
                    Some(("lognormal", sigma)) => RuntimeNoise::Lognormal { sigma: parse_f64(k, sigma)? },
                    _ => return Err(cfg_err(k, format!("expected deterministic or lognormal:<sigma>, got `{v}`"))),
                }
            }
            "sim.plan_cost_s" => self.plan_cost_s = parse_f64(k, v)?,
            "sim.audit" => self.audit = parse_bool(k, v)?,
            "sim.horizon_s" => {
                self.horizon_s = match v {
                    "" | "none" => None,
                    _ => Some(parse_f64(k, v)?),
                }
            }
            _ => return Err(cfg_err(key, "unknown key")),
        }
        Ok(())
    }

    /// Checks every value; key names in errors match the text form.
    pub fn validate(&self) -> Result<()> {
        let c = &self.cluster;
        if c.workers == 0 {
            return Err(cfg_err("cluster.worker_count", "must be >= 1"));
        }
        if c.gpu_capacity_bytes == 0 {
            return Err(cfg_err("cluster.gpu_capacity_bytes", "must be > 0"));
        }
        c.link.validate().map_err(|e| cfg_err("cluster.link", e))?;
        if let EvictionPolicy::Lookahead { window: 0 } = c.eviction {
            return Err(cfg_err("cluster.lookahead_window", "must be >= 1"));
        }
        if c.runtimes.multipliers.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(cfg_err("cluster.runtime_multipliers", "multipliers must be > 0"));
        }
        if !(self.scheduler.threshold.is_finite() && self.scheduler.threshold > 0.0) {
            return Err(cfg_err("scheduler.threshold", "must be > 0"));
        }
        match self.scheduler.penalty {
            PenaltyMode::Proportional(x) | PenaltyMode::Constant(x) if !(x.is_finite() && x >= 0.0) => {
                return Err(cfg_err("scheduler.eviction_penalty_value", "must be >= 0"));
            }
            _ => {}
        }
        for (key, x) in [
            ("sst.load_interval_s", self.sst_load_interval_s),
            ("sst.cache_interval_s", self.sst_cache_interval_s),
            ("sim.plan_cost_s", self.plan_cost_s),
        ] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(cfg_err(key, "must be finite and >= 0"));
            }
        }
        if let RuntimeNoise::Lognormal { sigma } = self.noise {
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err(cfg_err("sim.runtime_noise", "sigma must be >= 0"));
            }
        }
        if let Some(h) = self.horizon_s {
            if !(h.is_finite() && h > 0.0) {
                return Err(cfg_err("sim.horizon_s", "must be > 0"));
            }
        }
        Ok(())
    }

    /// Workflow catalog named by `workload.dfg_file`, or the built-in one.
    pub fn catalog(&self) -> Result<Catalog> {
        match &self.dfg_file {
            Some(p) => load_catalog(p),
            None => Ok(builtin_workflows()),
        }
    }

    /// Every key with its value, sorted by key, one `key=value` per line.
    pub fn canonical(&self) -> String {
        let c = &self.cluster;
        let s = &self.scheduler;
        let w = &self.workload;
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let (penalty_mode, penalty_value) = match s.penalty {
            PenaltyMode::Proportional(x) => ("proportional", x),
            PenaltyMode::Constant(x) => ("constant", x),
        };
        let (policy, window) = match c.eviction {
            EvictionPolicy::Fifo => ("fifo", String::new()),
            EvictionPolicy::Lookahead { window } => ("lookahead", window.to_string()),
        };
        let mix = if w.mix.is_empty() {
            "uniform".to_string()
        } else {
            w.mix.iter().map(|(id, x)| format!("{id}:{x}")).collect::<Vec<_>>().join(",")
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let mut pairs: Vec<(&str, String)> = vec![
            ("cluster.worker_count", c.workers.to_string()),
            ("cluster.gpu_capacity_bytes", c.gpu_capacity_bytes.to_string()),
            ("cluster.network_bandwidth_Bps", c.link.network_bandwidth_bps.to_string()),
            ("cluster.delta_network_s", c.link.delta_network_s.to_string()),
            ("cluster.pcie_bandwidth_Bps", c.link.pcie_bandwidth_bps.to_string()),
            ("cluster.delta_pcie_s", c.link.delta_pcie_s.to_string()),
            ("cluster.eviction_policy", policy.to_string()),
            ("cluster.lookahead_window", window),
            ("cluster.runtime_multipliers", list(&c.runtimes.multipliers)),
            ("scheduler.kind", s.kind.to_string()),
            ("scheduler.threshold", s.threshold.to_string()),
            ("scheduler.dynamic_adjustment", s.dynamic_adjustment.to_string()),
            ("scheduler.model_locality", s.model_locality.to_string()),
            ("scheduler.eviction_penalty_mode", penalty_mode.to_string()),
            ("scheduler.eviction_penalty_value", penalty_value.to_string()),
            ("sst.load_interval_s", self.sst_load_interval_s.to_string()),
            ("sst.cache_interval_s", self.sst_cache_interval_s.to_string()),
            (
                "workload.mode",
                match w.mode {
                    WorkloadMode::Poisson => "poisson",
                    WorkloadMode::Trace => "trace",
                }
                .to_string(),
            ),
            ("workload.rate", w.rate.to_string()),
            ("workload.mix", mix),
            ("workload.duration_s", w.duration_s.to_string()),
            ("workload.jobs", w.jobs.map(|j| j.to_string()).unwrap_or_else(|| "none".into())),
            ("workload.trace_path", path(&w.trace_path)),
            ("workload.rescale", w.rescale.to_string()),
            ("workload.dfg_file", path(&self.dfg_file)),
            ("sim.seed", self.seed.to_string()),
            (
                "sim.runtime_noise",
                match self.noise {
                    RuntimeNoise::Deterministic => "deterministic".to_string(),
                    RuntimeNoise::Lognormal { sigma } => format!("lognormal:{sigma}"),
                },
            ),
            ("sim.plan_cost_s", self.plan_cost_s.to_string()),
            ("sim.audit", self.audit.to_string()),
            ("sim.horizon_s", self.horizon_s.map(|h| h.to_string()).unwrap_or_else(|| "none".into())),
        ];
        pairs.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// SHA-256 of [`SimConfig::canonical`], hex.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn with_kind(mut self, kind: SchedulerKind) -> Self {
        self.scheduler.kind = kind;
        self
    }
}
