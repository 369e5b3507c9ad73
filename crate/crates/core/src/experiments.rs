//! Named experiment presets, each a grid of simulation configs.

use std::path::PathBuf;

use crate::cluster::EvictionPolicy;
use crate::error::{Error, Result};
use crate::sched::SchedulerKind;
use crate::sim::SimConfig;
use crate::workload::WorkloadMode;

pub const PRESETS: [&str; 7] =
    ["low_load", "high_load", "vary_load", "ablation", "staleness_sweep", "scalability", "trace_replay"];

pub const LOW_RATE: f64 = 0.5;
pub const HIGH_RATE: f64 = 2.0;
pub const SWEEP_RATES: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 2.5];
pub const STALENESS_S: [f64; 4] = [0.1, 0.2, 0.5, 1.0];
pub const SCALE_RATE: f64 = 40.0;
pub const SCALE_JOBS: usize = 2400;
pub const SMALL_CLUSTER: usize = 5;
pub const PRESET_JOBS: usize = 500;

pub fn scale_workers() -> Vec<usize> {
    (1..=10).map(|i| i * 25).collect()
}

/// Values fixed on the command line. A fixed value collapses the matching
/// axis of a preset's grid to that single value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PresetOverrides {
    pub scheduler: Option<SchedulerKind>,
    pub workers: Option<usize>,
    pub rate: Option<f64>,
    pub load_interval_s: Option<f64>,
    pub cache_interval_s: Option<f64>,
    pub trace: Option<PathBuf>,
    pub rescale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: String,
    /// Run label (a relative path such as `rate_1.5/compass`) and its config.
    pub runs: Vec<(String, SimConfig)>,
}

fn axis<T: Clone>(fixed: &Option<T>, grid: &[T]) -> Vec<T> {
    match fixed {
        Some(v) => vec![v.clone()],
        None => grid.to_vec(),
    }
}

fn label(parts: &[String]) -> String {
    parts.iter().filter(|p| !p.is_empty()).cloned().collect::<Vec<_>>().join("/")
}

/// Expands preset `name` over `base`.
pub fn expand_preset(name: &str, base: &SimConfig, ov: &PresetOverrides) -> Result<ExperimentPreset> {
    let mut base = base.clone();
    base.workload.mode = WorkloadMode::Poisson;
    base.workload.jobs = Some(PRESET_JOBS);
    base.workload.duration_s = 1e9;
    base.cluster.workers = ov.workers.unwrap_or(SMALL_CLUSTER);
    let schedulers = axis(&ov.scheduler, &SchedulerKind::ALL);
    let mut runs = Vec::new();
    let rate_runs = |rates: &[f64], runs: &mut Vec<(String, SimConfig)>, tag_rate: bool| {
        for r in axis(&ov.rate, rates) {
            for &k in &schedulers {
                let mut c = base.clone().with_kind(k);
                c.workload.rate = r;
                let tag = if tag_rate { format!("rate_{r}") } else { String::new() };
                runs.push((label(&[tag, k.to_string()]), c));
            }
        }
    };
    match name {
        "low_load" => rate_runs(&[LOW_RATE], &mut runs, false),
        "high_load" => rate_runs(&[HIGH_RATE], &mut runs, false),
        "vary_load" => rate_runs(&SWEEP_RATES, &mut runs, true),
        "ablation" => {
            let mut full = base.clone().with_kind(SchedulerKind::Compass);
            full.workload.rate = ov.rate.unwrap_or(HIGH_RATE);
            let mut no_da = full.clone();
            no_da.scheduler.dynamic_adjustment = false;
            let mut no_loc = full.clone();
            no_loc.scheduler.model_locality = false;
            let mut fifo = full.clone();
            fifo.cluster.eviction = EvictionPolicy::Fifo;
            runs.push(("full".into(), full));
            runs.push(("no_dynamic_adjustment".into(), no_da));
            runs.push(("no_model_locality".into(), no_loc));
            runs.push(("fifo_eviction".into(), fifo));
        }
        "staleness_sweep" => {
            for li in axis(&ov.load_interval_s, &STALENESS_S) {
                for ci in axis(&ov.cache_interval_s, &STALENESS_S) {
                    for &k in &axis(&ov.scheduler, &[SchedulerKind::Compass]) {
                        let mut c = base.clone().with_kind(k);
                        c.workload.rate = ov.rate.unwrap_or(HIGH_RATE);
                        c.sst_load_interval_s = li;
                        c.sst_cache_interval_s = ci;
                        let tag = if ov.scheduler.is_some() { k.to_string() } else { String::new() };
                        runs.push((label(&[format!("load_{li}_cache_{ci}"), tag]), c));
                    }
                }
            }
        }
        "scalability" => {
            let kinds = axis(&ov.scheduler, &[SchedulerKind::Compass, SchedulerKind::Hash]);
            for w in axis(&ov.workers, &scale_workers()) {
                for &k in &kinds {
                    let mut c = base.clone().with_kind(k);
                    c.cluster.workers = w;
                    c.workload.rate = ov.rate.unwrap_or(SCALE_RATE);
                    c.workload.jobs = Some(SCALE_JOBS);
                    runs.push((label(&[format!("workers_{w}"), k.to_string()]), c));
                }
            }
        }
        "trace_replay" => {
            let path = ov.trace.clone().ok_or_else(|| Error::Config {
                key: "workload.trace_path".into(),
                reason: "the trace_replay preset needs --trace".into(),
            })?;
            for &k in &schedulers {
                let mut c = base.clone().with_kind(k);
                c.workload.mode = WorkloadMode::Trace;
                c.workload.trace_path = Some(path.clone());
                c.workload.rescale = ov.rescale.unwrap_or(1.0);
                c.workload.jobs = None;
                runs.push((k.to_string(), c));
            }
        }
        _ => return Err(Error::UnknownPreset(name.to_string())),
    }
    for (_, c) in &mut runs {
        if let Some(li) = ov.load_interval_s {
            c.sst_load_interval_s = li;
        }
        if let Some(ci) = ov.cache_interval_s {
            c.sst_cache_interval_s = ci;
        }
    }
    Ok(ExperimentPreset { name: name.to_string(), runs })
}
