//! Job-arrival streams: Poisson mixes over the catalog's DFGs and trace replay.
//!
//! Generated jobs carry `origin_worker = 0`; the simulator assigns origins.

use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_distr::Exp;

use crate::error::{Error, Result};
use crate::workflow::{Catalog, JobInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkloadMode {
    Poisson,
    Trace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub mode: WorkloadMode,
    /// Requests per second.
    pub rate: f64,
    /// DFG id to weight. Empty means uniform over the catalog.
    pub mix: Vec<(String, f64)>,
    /// Arrivals stop at this time, seconds.
    pub duration_s: f64,
    /// Optional cap on the number of jobs.
    pub jobs: Option<usize>,
    pub trace_path: Option<PathBuf>,
    /// Multiplier applied to trace timestamps.
    pub rescale: f64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            mode: WorkloadMode::Poisson,
            rate: 0.5,
            mix: Vec::new(),
            duration_s: 1000.0,
            jobs: None,
            trace_path: None,
            rescale: 1.0,
        }
    }
}

impl WorkloadSpec {
    /// Catalog indices and weights of the mix.
    pub fn weights(&self, catalog: &Catalog) -> Result<Vec<(usize, f64)>> {
        if self.mix.is_empty() {
            let n = catalog.dfgs().len();
            return Ok((0..n).map(|i| (i, 1.0 / n as f64)).collect());
        }
        let mut out = Vec::with_capacity(self.mix.len());
        for (id, w) in &self.mix {
            let i = catalog.dfg_index(id).ok_or_else(|| Error::UnknownDfg(id.clone()))?;
            if !(w.is_finite() && *w >= 0.0) {
                return Err(mix_err(format!("weight for `{id}` must be non-negative")));
            }
            out.push((i, *w));
        }
        let total: f64 = out.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(mix_err(format!("weights sum to {total}, expected 1")));
        }
        Ok(out)
    }

    pub fn validate(&self, catalog: &Catalog) -> Result<()> {
        match self.mode {
            WorkloadMode::Poisson => {
                if !(self.rate.is_finite() && self.rate > 0.0) {
                    return Err(Error::Config {
                        key: "workload.rate".into(),
                        reason: "must be > 0".into(),
                    });
                }
                if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
                    return Err(Error::Config {
                        key: "workload.duration_s".into(),
                        reason: "must be >= 0".into(),
                    });
                }
                self.weights(catalog).map(|_| ())
            }
            WorkloadMode::Trace => {
                if self.trace_path.is_none() {
                    return Err(Error::Config {
                        key: "workload.trace_path".into(),
                        reason: "required in trace mode".into(),
                    });
                }
                if !(self.rescale.is_finite() && self.rescale > 0.0) {
                    return Err(Error::Config {
                        key: "workload.rescale".into(),
                        reason: "must be > 0".into(),
                    });
                }
                Ok(())
            }
        }
    }
}

fn mix_err(reason: String) -> Error {
    Error::Config { key: "workload.mix".into(), reason }
}

/// Exponential inter-arrivals with mean `1 / rate` until `duration_s` (or the
/// job cap); each job's DFG is drawn from the mix.
pub fn gen_poisson<R: Rng + ?Sized>(
    spec: &WorkloadSpec,
    catalog: &Catalog,
    rng: &mut R,
) -> Result<Vec<JobInstance>> {
    let weights = spec.weights(catalog)?;
    let pick = WeightedIndex::new(weights.iter().map(|p| p.1)).map_err(|e| mix_err(e.to_string()))?;
    let gap = Exp::new(spec.rate).map_err(|e| Error::Config {
        key: "workload.rate".into(),
        reason: e.to_string(),
    })?;
    let cap = spec.jobs.unwrap_or(usize::MAX);
    let mut jobs = Vec::new();
    let mut t = 0.0;
    while jobs.len() < cap {
        t += gap.sample(rng);
        if t > spec.duration_s {
            break;
        }
        let dfg = weights[pick.sample(rng)].0;
        jobs.push(JobInstance {
            job_id: jobs.len() as u64,
            dfg_id: catalog.dfgs()[dfg].id().to_string(),
            arrival_s: t,
            origin_worker: 0,
        });
    }
    Ok(jobs)
}

/// Reads an `arrival_s,dfg_id` CSV and scales its timestamps by `rescale`.
pub fn parse_trace(path: &Path, rescale: f64, catalog: &Catalog) -> Result<Vec<JobInstance>> {
    let text = std::fs::read_to_string(path)?;
    parse_trace_str(&text, &path.display().to_string(), rescale, catalog)
}

pub fn parse_trace_str(
    text: &str,
    origin: &str,
    rescale: f64,
    catalog: &Catalog,
) -> Result<Vec<JobInstance>> {
    let err = |line: usize, reason: String| Error::Parse { path: origin.to_string(), line, reason };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if header.len() != 2 || &header[0] != "arrival_s" || &header[1] != "dfg_id" {
        return Err(err(1, "expected header `arrival_s,dfg_id`".into()));
    }
    let mut jobs: Vec<JobInstance> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let t: f64 = rec[0]
            .parse()
            .map_err(|_| err(line, format!("bad arrival time `{}`", &rec[0])))?;
        if !(t.is_finite() && t >= 0.0) {
            return Err(err(line, format!("arrival time {t} must be finite and >= 0")));
        }
        let id = &rec[1];
        if catalog.dfg_index(id).is_none() {
            return Err(err(line, format!("unknown dfg `{id}`")));
        }
        let arrival_s = t * rescale;
        if jobs.last().is_some_and(|j| arrival_s < j.arrival_s) {
            return Err(err(line, "arrival times must be non-decreasing".into()));
        }
        jobs.push(JobInstance {
            job_id: jobs.len() as u64,
            dfg_id: id.to_string(),
            arrival_s,
            origin_worker: 0,
        });
    }
    Ok(jobs)
}

/// Jobs described by `spec`, drawing on `rng` only in Poisson mode.
pub fn load_jobs<R: Rng + ?Sized>(
    spec: &WorkloadSpec,
    catalog: &Catalog,
    rng: &mut R,
) -> Result<Vec<JobInstance>> {
    spec.validate(catalog)?;
    match spec.mode {
        WorkloadMode::Poisson => gen_poisson(spec, catalog, rng),
        WorkloadMode::Trace => {
            let path = spec.trace_path.as_deref().expect("validated");
            let mut jobs = parse_trace(path, spec.rescale, catalog)?;
            if let Some(cap) = spec.jobs {
                jobs.truncate(cap);
            }
            Ok(jobs)
        }
    }
}
