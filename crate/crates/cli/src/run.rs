use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dagsched_core::cluster::EvictionPolicy;
use dagsched_core::experiments::{expand_preset, PresetOverrides};
use dagsched_core::metrics::{summarize_result, OVERALL};
use dagsched_core::{compare as compare_dirs, run_simulation, SimConfig, SimResult, WorkloadMode};
use rayon::prelude::*;

use crate::{Eviction, RunArgs};

/// Runs every configuration the arguments describe. `Ok(false)` means some
/// run failed its audit.
pub fn run(args: RunArgs) -> Result<bool> {
    let mut base = match &args.config {
        Some(p) => SimConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => SimConfig::default(),
    };
    let mut runs = match &args.preset {
        Some(name) => {
            let ov = PresetOverrides {
                scheduler: args.scheduler,
                workers: args.workers,
                rate: args.rate,
                load_interval_s: args.sst_load_interval,
                cache_interval_s: args.sst_cache_interval,
                trace: args.trace.clone(),
                rescale: args.rescale,
            };
            expand_preset(name, &base, &ov)?.runs
        }
        None => {
            if let Some(k) = args.scheduler {
                base.scheduler.kind = k;
            }
            if let Some(w) = args.workers {
                base.cluster.workers = w;
            }
            if let Some(r) = args.rate {
                base.workload.rate = r;
            }
            if let Some(x) = args.sst_load_interval {
                base.sst_load_interval_s = x;
            }
            if let Some(x) = args.sst_cache_interval {
                base.sst_cache_interval_s = x;
            }
            if let Some(t) = &args.trace {
                base.workload.mode = WorkloadMode::Trace;
                base.workload.trace_path = Some(t.clone());
            }
            if let Some(x) = args.rescale {
                base.workload.rescale = x;
            }
            vec![(base.scheduler.kind.to_string(), base)]
        }
    };
    for (_, c) in &mut runs {
        if let Some(t) = args.threshold {
            c.scheduler.threshold = t;
        }
        if args.no_dynamic_adjustment {
            c.scheduler.dynamic_adjustment = false;
        }
        if args.no_model_locality {
            c.scheduler.model_locality = false;
        }
        match args.eviction {
            Some(Eviction::Fifo) => c.cluster.eviction = EvictionPolicy::Fifo,
            Some(Eviction::Lookahead) if c.cluster.eviction == EvictionPolicy::Fifo => {
                c.cluster.eviction = EvictionPolicy::default()
            }
            _ => {}
        }
        if let Some(s) = args.seed {
            c.seed = s;
        }
        c.validate()?;
    }
    if !args.seeds.is_empty() {
        runs = runs
            .into_iter()
            .flat_map(|(label, c)| {
                args.seeds.iter().map(move |&s| {
                    let mut c = c.clone();
                    c.seed = s;
                    (format!("{label}/seed_{s}"), c)
                })
            })
            .collect();
    }

    let results: Vec<Result<SimResult>> = runs
        .par_iter()
        .map(|(label, c)| run_simulation(c).with_context(|| format!("run {label}")))
        .collect();

    let single = runs.len() == 1;
    let mut clean = true;
    let mut index = Vec::new();
    for ((label, cfg), result) in runs.iter().zip(results) {
        let result = result?;
        let dir = if single { args.out.clone() } else { args.out.join(label) };
        dagsched_core::write_results(&result, &dir).with_context(|| format!("writing {}", dir.display()))?;
        if !result.audit.is_clean() {
            clean = false;
            eprintln!("audit failed for {label}:");
            for v in result.audit.violations.iter().take(10) {
                eprintln!("  {v}");
            }
        }
        index.push(index_line(label, cfg, &result, &dir));
    }
    fs::create_dir_all(&args.out)?;
    write_index(&args.out.join("index.csv"), &index)?;
    print_table(&index);
    Ok(clean)
}

struct IndexLine {
    label: String,
    dir: PathBuf,
    scheduler: String,
    workers: usize,
    rate: f64,
    seed: u64,
    jobs: usize,
    median_sdf: f64,
    mean_latency_s: f64,
    hit_rate: f64,
    active_workers: usize,
    violations: usize,
    config_hash: String,
}

fn index_line(label: &str, cfg: &SimConfig, r: &SimResult, dir: &Path) -> IndexLine {
    let summary = summarize_result(r);
    let overall = summary.iter().find(|s| s.dfg_id == OVERALL);
    IndexLine {
        label: label.to_string(),
        dir: dir.to_path_buf(),
        scheduler: cfg.scheduler.kind.to_string(),
        workers: cfg.cluster.workers,
        rate: cfg.workload.rate,
        seed: cfg.seed,
        jobs: r.jobs.len(),
        median_sdf: overall.map_or(f64::NAN, |s| s.slow_down.median),
        mean_latency_s: overall.map_or(f64::NAN, |s| s.latency_mean_s),
        hit_rate: overall.map_or(f64::NAN, |s| s.cache.hit_rate()),
        active_workers: overall.map_or(0, |s| s.active_workers),
        violations: r.audit.violations.len(),
        config_hash: r.config_hash.clone(),
    }
}

fn write_index(path: &Path, lines: &[IndexLine]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(
        f,
        "label,dir,scheduler,workers,rate,seed,jobs,median_sdf,mean_latency_s,cache_hit_rate,active_workers,audit_violations,config_hash"
    )?;
    for l in lines {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            l.label,
            l.dir.display(),
            l.scheduler,
            l.workers,
            l.rate,
            l.seed,
            l.jobs,
            l.median_sdf,
            l.mean_latency_s,
            l.hit_rate,
            l.active_workers,
            l.violations,
            l.config_hash
        )?;
    }
    Ok(())
}

fn print_table(lines: &[IndexLine]) {
    println!(
        "{:<40} {:>6} {:>10} {:>12} {:>9} {:>7}",
        "run", "jobs", "median_sdf", "mean_lat_s", "hit_rate", "active"
    );
    for l in lines {
        println!(
            "{:<40} {:>6} {:>10.3} {:>12.3} {:>9.3} {:>7}",
            l.label, l.jobs, l.median_sdf, l.mean_latency_s, l.hit_rate, l.active_workers
        );
    }
}

pub fn compare(dirs: &[PathBuf]) -> Result<()> {
    if dirs.is_empty() {
        bail!("compare needs at least one result directory");
    }
    print!("{}", compare_dirs(dirs)?);
    Ok(())
}
