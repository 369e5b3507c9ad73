//! Evaluation metrics and result files.
//!
//! A result directory holds `jobs.csv`, `summary.csv`, `workers.csv` and
//! `run_meta.txt`; column layouts are listed in `docs/csv_schema.md`. Floats
//! are written in shortest round-trip form, so reading a file back reproduces
//! the values exactly. Quantiles interpolate linearly between order statistics
//! (`h = (n - 1) p`), and whiskers follow Tukey's 1.5 IQR rule.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::cluster::CacheStats;
use crate::error::{Error, Result};
use crate::sim::SimResult;
use crate::workflow::{JobId, WorkerId};

#[derive(Debug, Clone, PartialEq)]
pub struct JobRecord {
    pub job_id: JobId,
    pub dfg_id: String,
    pub arrival_s: f64,
    pub completion_s: f64,
    pub latency_s: f64,
    pub lower_bound_s: f64,
    pub slow_down_factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkerRecord {
    pub worker: WorkerId,
    pub tasks_executed: u64,
    pub busy_s: f64,
    pub hits: u64,
    pub misses: u64,
    pub fetches: u64,
    pub evictions: u64,
}

/// `latency / lower_bound`; a latency under the bound is an invariant violation.
pub fn slow_down_factor(latency: f64, lower_bound: f64) -> Result<f64> {
    if !(lower_bound > 0.0) || latency < lower_bound {
        return Err(Error::SlowDown { latency, lower_bound });
    }
    Ok(latency / lower_bound)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Smallest value at or above `q1 - 1.5 IQR`, never above `q1`.
    pub whisker_low: f64,
    /// Largest value at or below `q3 + 1.5 IQR`, never below `q3`.
    pub whisker_high: f64,
    pub min: f64,
    pub max: f64,
}

pub fn box_stats(values: &[f64]) -> BoxStats {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q1 = quantile(&v, 0.25);
    let q3 = quantile(&v, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    BoxStats {
        mean: v.iter().sum::<f64>() / v.len() as f64,
        q1,
        median: quantile(&v, 0.5),
        q3,
        whisker_low: v.iter().copied().find(|&x| x >= lo).unwrap_or(v[0]).min(q1),
        whisker_high: v.iter().rev().copied().find(|&x| x <= hi).unwrap_or(v[v.len() - 1]).max(q3),
        min: v[0],
        max: v[v.len() - 1],
    }
}

pub fn median(values: &[f64]) -> f64 {
    box_stats(values).median
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// One `summary.csv` row: a DFG, or `overall`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub dfg_id: String,
    pub jobs: usize,
    pub slow_down: BoxStats,
    pub latency_mean_s: f64,
    pub latency_median_s: f64,
    pub cache: CacheStats,
    /// Cluster-wide busy time over `workers * duration`; stands in for GPU energy.
    pub gpu_busy_proxy: f64,
    /// Cluster-wide count of workers that executed at least one task.
    pub active_workers: usize,
}

pub const OVERALL: &str = "overall";

/// Per-DFG rows (catalog order, DFGs with jobs only) followed by `overall`.
/// Empty when no job completed.
pub fn summarize(
    jobs: &[JobRecord],
    workers: &[WorkerRecord],
    dfg_cache: &[(String, CacheStats)],
    duration_s: f64,
) -> Vec<SummaryRow> {
    if jobs.is_empty() {
        return Vec::new();
    }
    let busy: f64 = workers.iter().map(|w| w.busy_s).sum();
    let proxy = if duration_s > 0.0 { busy / (workers.len() as f64 * duration_s) } else { 0.0 };
    let active = workers.iter().filter(|w| w.tasks_executed > 0).count();
    let row = |id: &str, sel: &[&JobRecord], cache: CacheStats| {
        let sdf: Vec<f64> = sel.iter().map(|j| j.slow_down_factor).collect();
        let lat: Vec<f64> = sel.iter().map(|j| j.latency_s).collect();
        SummaryRow {
            dfg_id: id.to_string(),
            jobs: sel.len(),
            slow_down: box_stats(&sdf),
            latency_mean_s: mean(&lat),
            latency_median_s: median(&lat),
            cache,
            gpu_busy_proxy: proxy,
            active_workers: active,
        }
    };
    let mut rows = Vec::new();
    let mut total = CacheStats::default();
    for (id, stats) in dfg_cache {
        total.hits += stats.hits;
        total.misses += stats.misses;
        total.fetches += stats.fetches;
        total.evictions += stats.evictions;
        let sel: Vec<&JobRecord> = jobs.iter().filter(|j| &j.dfg_id == id).collect();
        if !sel.is_empty() {
            rows.push(row(id, &sel, *stats));
        }
    }
    let all: Vec<&JobRecord> = jobs.iter().collect();
    rows.push(row(OVERALL, &all, total));
    rows
}

pub fn summarize_result(r: &SimResult) -> Vec<SummaryRow> {
    summarize(&r.jobs, &r.workers, &r.dfg_cache, r.duration_s)
}

pub const JOBS_HEADER: [&str; 7] =
    ["job_id", "dfg_id", "arrival_s", "completion_s", "latency_s", "lower_bound_s", "slow_down_factor"];

pub const SUMMARY_HEADER: [&str; 20] = [
    "dfg_id",
    "jobs",
    "sdf_mean",
    "sdf_q1",
    "sdf_median",
    "sdf_q3",
    "sdf_whisker_low",
    "sdf_whisker_high",
    "sdf_min",
    "sdf_max",
    "latency_mean_s",
    "latency_median_s",
    "cache_hits",
    "cache_misses",
    "cache_hit_rate",
    "model_fetches",
    "evictions",
    "gpu_busy_proxy",
    "active_workers",
    "cache_accesses",
];

pub const WORKERS_HEADER: [&str; 8] =
    ["worker", "tasks_executed", "busy_s", "cache_hits", "cache_misses", "cache_hit_rate", "model_fetches", "evictions"];

fn summary_fields(r: &SummaryRow) -> Vec<String> {
    let s = &r.slow_down;
    vec![
        r.dfg_id.clone(),
        r.jobs.to_string(),
        s.mean.to_string(),
        s.q1.to_string(),
        s.median.to_string(),
        s.q3.to_string(),
        s.whisker_low.to_string(),
        s.whisker_high.to_string(),
        s.min.to_string(),
        s.max.to_string(),
        r.latency_mean_s.to_string(),
        r.latency_median_s.to_string(),
        r.cache.hits.to_string(),
        r.cache.misses.to_string(),
        r.cache.hit_rate().to_string(),
        r.cache.fetches.to_string(),
        r.cache.evictions.to_string(),
        r.gpu_busy_proxy.to_string(),
        r.active_workers.to_string(),
        (r.cache.hits + r.cache.misses).to_string(),
    ]
}

/// Writes the result files into `dir`, creating it if needed.
pub fn write_results(result: &SimResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("jobs.csv"))?;
    w.write_record(JOBS_HEADER)?;
    for j in &result.jobs {
        w.write_record([
            j.job_id.to_string(),
            j.dfg_id.clone(),
            j.arrival_s.to_string(),
            j.completion_s.to_string(),
            j.latency_s.to_string(),
            j.lower_bound_s.to_string(),
            j.slow_down_factor.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record(SUMMARY_HEADER)?;
    for r in summarize_result(result) {
        w.write_record(summary_fields(&r))?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("workers.csv"))?;
    w.write_record(WORKERS_HEADER)?;
    for r in &result.workers {
        let stats = CacheStats { hits: r.hits, misses: r.misses, fetches: r.fetches, evictions: r.evictions };
        w.write_record([
            r.worker.to_string(),
            r.tasks_executed.to_string(),
            r.busy_s.to_string(),
            r.hits.to_string(),
            r.misses.to_string(),
            stats.hit_rate().to_string(),
            r.fetches.to_string(),
            r.evictions.to_string(),
        ])?;
    }
    w.flush()?;

    fs::write(dir.join("run_meta.txt"), run_meta(result))?;
    Ok(())
}

fn run_meta(r: &SimResult) -> String {
    let mut s = format!(
        "seed={}\nconfig_hash={}\njobs_submitted={}\njobs_completed={}\nduration_s={}\n\
         reassignments={}\nsst_load_publications={}\nsst_cache_publications={}\n\
         audit_events={}\naudit_violations={}\n\
         gpu_busy_proxy=busy time / (workers * duration), a stand-in for GPU energy\n[config]\n{}",
        r.seed,
        r.config_hash,
        r.jobs_submitted,
        r.jobs.len(),
        r.duration_s,
        r.reassignments,
        r.sst_load_publications,
        r.sst_cache_publications,
        r.audit.events_checked,
        r.audit.violations.len(),
        r.canonical_config,
    );
    if !r.audit.violations.is_empty() {
        s.push_str("[violations]\n");
        for v in &r.audit.violations {
            s.push_str(v);
            s.push('\n');
        }
    }
    s
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, reason: reason.into() }
}

fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let got = rdr.headers()?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(parse_err(path, 1, format!("unexpected header, expected {}", header.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        out.push((line, rec));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec[i].parse().map_err(|_| parse_err(path, line, format!("bad value `{}` in column {}", &rec[i], i + 1)))
}

pub fn read_jobs(path: &Path) -> Result<Vec<JobRecord>> {
    read_csv(path, &JOBS_HEADER)?
        .into_iter()
        .map(|(l, r)| {
            Ok(JobRecord {
                job_id: field(path, l, &r, 0)?,
                dfg_id: r[1].to_string(),
                arrival_s: field(path, l, &r, 2)?,
                completion_s: field(path, l, &r, 3)?,
                latency_s: field(path, l, &r, 4)?,
                lower_bound_s: field(path, l, &r, 5)?,
                slow_down_factor: field(path, l, &r, 6)?,
            })
        })
        .collect()
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    read_csv(path, &SUMMARY_HEADER)?
        .into_iter()
        .map(|(l, r)| {
            let f = |i| field::<f64>(path, l, &r, i);
            Ok(SummaryRow {
                dfg_id: r[0].to_string(),
                jobs: field(path, l, &r, 1)?,
                slow_down: BoxStats {
                    mean: f(2)?,
                    q1: f(3)?,
                    median: f(4)?,
                    q3: f(5)?,
                    whisker_low: f(6)?,
                    whisker_high: f(7)?,
                    min: f(8)?,
                    max: f(9)?,
                },
                latency_mean_s: f(10)?,
                latency_median_s: f(11)?,
                cache: CacheStats {
                    hits: field(path, l, &r, 12)?,
                    misses: field(path, l, &r, 13)?,
                    fetches: field(path, l, &r, 15)?,
                    evictions: field(path, l, &r, 16)?,
                },
                gpu_busy_proxy: f(17)?,
                active_workers: field(path, l, &r, 18)?,
            })
        })
        .collect()
}

pub fn read_workers(path: &Path) -> Result<Vec<WorkerRecord>> {
    read_csv(path, &WORKERS_HEADER)?
        .into_iter()
        .map(|(l, r)| {
            Ok(WorkerRecord {
                worker: field(path, l, &r, 0)?,
                tasks_executed: field(path, l, &r, 1)?,
                busy_s: field(path, l, &r, 2)?,
                hits: field(path, l, &r, 3)?,
                misses: field(path, l, &r, 4)?,
                fetches: field(path, l, &r, 6)?,
                evictions: field(path, l, &r, 7)?,
            })
        })
        .collect()
}

/// `key=value` lines of `run_meta.txt`, including the `[config]` section.
pub fn read_meta(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .take_while(|l| *l != "[violations]")
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

/// Side-by-side view of several result directories.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Column label per directory: its name and scheduler.
    pub labels: Vec<String>,
    /// DFG id, then per directory `(median slow-down, mean latency)`.
    pub rows: Vec<(String, Vec<Option<(f64, f64)>>)>,
}

impl Comparison {
    /// Mean latency of column `i` relative to column 0, per row.
    pub fn latency_ratio(&self, row: usize, i: usize) -> Option<f64> {
        let cells = &self.rows[row].1;
        Some(cells[i]?.1 / cells[0]?.1)
    }
}

pub fn compare(dirs: &[PathBuf]) -> Result<Comparison> {
    let mut labels = Vec::new();
    let mut tables = Vec::new();
    for d in dirs {
        if !d.is_dir() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("result directory {} not found", d.display()),
            )));
        }
        let meta = read_meta(&d.join("run_meta.txt"))?;
        let kind = meta.iter().find(|(k, _)| k == "scheduler.kind").map_or("?", |(_, v)| v.as_str());
        let name = d.file_name().map_or_else(|| d.display().to_string(), |n| n.to_string_lossy().into_owned());
        labels.push(format!("{name} ({kind})"));
        tables.push(read_summary(&d.join("summary.csv"))?);
    }
    let mut ids: Vec<String> = Vec::new();
    for t in &tables {
        for r in t {
            if r.dfg_id != OVERALL && !ids.contains(&r.dfg_id) {
                ids.push(r.dfg_id.clone());
            }
        }
    }
    ids.push(OVERALL.to_string());
    let rows = ids
        .into_iter()
        .map(|id| {
            let cells = tables
                .iter()
                .map(|t| t.iter().find(|r| r.dfg_id == id).map(|r| (r.slow_down.median, r.latency_mean_s)))
                .collect();
            (id, cells)
        })
        .collect();
    Ok(Comparison { labels, rows })
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<16}", "dfg")?;
        for l in &self.labels {
            write!(f, " | {l:>32}")?;
        }
        writeln!(f)?;
        write!(f, "{:<16}", "")?;
        for _ in &self.labels {
            write!(f, " | {:>32}", "median_sdf  mean_lat_s  lat_ratio")?;
        }
        writeln!(f)?;
        for (r, (id, cells)) in self.rows.iter().enumerate() {
            write!(f, "{id:<16}")?;
            for (i, c) in cells.iter().enumerate() {
                match c {
                    Some((m, l)) => {
                        let ratio = self.latency_ratio(r, i).map_or("-".to_string(), |x| format!("{x:.3}"));
                        write!(f, " | {m:>10.3}  {l:>10.3}  {ratio:>9}")?
                    }
                    None => write!(f, " | {:>32}", "-")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfg_file::builtin_workflows;
    use crate::sim::{run_simulation, SimConfig};
    use proptest::prelude::*;

    #[test]
    fn slow_down_cases() {
        assert_eq!(slow_down_factor(7.0, 7.0).unwrap(), 1.0);
        assert_eq!(slow_down_factor(14.0, 7.0).unwrap(), 2.0);
        assert!(matches!(slow_down_factor(6.0, 7.0), Err(Error::SlowDown { .. })));
        assert!(slow_down_factor(1.0, 0.0).is_err());
    }

    #[test]
    fn quartiles_of_five_values() {
        // h = 4p: q1 at index 1, median at 2, q3 at 3.
        let b = box_stats(&[7.0, 1.0, 3.0, 9.0, 5.0]);
        assert_eq!((b.q1, b.median, b.q3), (3.0, 5.0, 7.0));
        assert_eq!(b.mean, 5.0);
        // IQR 4: fences at -3 and 13.
        assert_eq!((b.whisker_low, b.whisker_high), (1.0, 9.0));
        // Interpolated: four values, q1 at h = 0.75.
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.25), 1.75);
    }

    #[test]
    fn whiskers_exclude_outliers() {
        let b = box_stats(&[1.0, 2.0, 3.0, 4.0, 100.0]);
        assert_eq!(b.whisker_high, 4.0);
        assert_eq!(b.max, 100.0);
    }

    #[test]
    fn single_job_summary() {
        let j = JobRecord {
            job_id: 0,
            dfg_id: "dialogue".into(),
            arrival_s: 0.0,
            completion_s: 2.0,
            latency_s: 2.0,
            lower_bound_s: 1.0,
            slow_down_factor: 2.0,
        };
        let rows = summarize(&[j], &[], &[("dialogue".into(), CacheStats::default())], 2.0);
        assert_eq!(rows.len(), 2);
        let s = rows[0].slow_down;
        assert!([s.q1, s.median, s.q3, s.whisker_low, s.whisker_high].iter().all(|&x| x == 2.0));
        assert_eq!(rows[0].cache.hit_rate(), 1.0);
    }

    fn small_run(kind: &str) -> SimResult {
        let mut c = SimConfig::default();
        c.set("scheduler", kind).unwrap();
        c.set("workload.jobs", "60").unwrap();
        c.set("workload.rate", "2").unwrap();
        run_simulation(&c).unwrap()
    }

    #[test]
    fn write_read_round_trip() {
        let r = small_run("compass");
        let dir = tempfile::tempdir().unwrap();
        write_results(&r, dir.path()).unwrap();
        assert_eq!(read_jobs(&dir.path().join("jobs.csv")).unwrap(), r.jobs);
        assert_eq!(read_workers(&dir.path().join("workers.csv")).unwrap(), r.workers);
        let summary = read_summary(&dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary, summarize_result(&r));
        // Per-DFG rows for the four pipelines, plus overall.
        assert_eq!(summary.len(), builtin_workflows().dfgs().len() + 1);
        // Recomputing from jobs.csv reproduces the slow-down columns exactly.
        let jobs = read_jobs(&dir.path().join("jobs.csv")).unwrap();
        let again = summarize(&jobs, &r.workers, &r.dfg_cache, r.duration_s);
        assert_eq!(again, summary);
        let meta = read_meta(&dir.path().join("run_meta.txt")).unwrap();
        assert!(meta.contains(&("seed".into(), "42".into())));
        assert!(meta.contains(&("audit_violations".into(), "0".into())));
        assert!(meta.contains(&("config_hash".into(), r.config_hash.clone())));
    }

    #[test]
    fn empty_run_writes_headers_only() {
        let mut c = SimConfig::default();
        c.workload.duration_s = 0.0;
        let r = run_simulation(&c).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_results(&r, dir.path()).unwrap();
        let jobs = fs::read_to_string(dir.path().join("jobs.csv")).unwrap();
        assert_eq!(jobs, format!("{}\n", JOBS_HEADER.join(",")));
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 1);
    }

    #[test]
    fn compare_identical_and_missing() {
        let r = small_run("jit");
        let root = tempfile::tempdir().unwrap();
        let (a, b) = (root.path().join("a"), root.path().join("b"));
        write_results(&r, &a).unwrap();
        write_results(&r, &b).unwrap();
        let c = compare(&[a.clone(), b.clone(), a.clone()]).unwrap();
        assert_eq!(c.labels.len(), 3);
        for row in 0..c.rows.len() {
            assert_eq!(c.latency_ratio(row, 1), Some(1.0));
        }
        assert!(c.to_string().contains("a (jit)"));
        assert!(compare(&[a, root.path().join("missing")]).is_err());
    }

    proptest! {
        #[test]
        fn quartiles_ordered(v in proptest::collection::vec(0.0f64..100.0, 1..50)) {
            let b = box_stats(&v);
            prop_assert!(b.min <= b.whisker_low && b.whisker_low <= b.q1);
            prop_assert!(b.q1 <= b.median && b.median <= b.q3);
            prop_assert!(b.q3 <= b.whisker_high && b.whisker_high <= b.max);
        }
    }
}
