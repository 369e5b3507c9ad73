use std::fs;

use dagsched_core::metrics::{read_workers, summarize_result};
use dagsched_core::workload::parse_trace;
use dagsched_core::{
    builtin_workflows, compute_lower_bound, read_jobs, read_summary, run_simulation, simulate, write_results,
    JobInstance, RuntimeModel, SchedulerKind, SimConfig, WorkloadMode,
};

const GB: u64 = 1_000_000_000;

fn small(kind: SchedulerKind, rate: f64, jobs: usize) -> SimConfig {
    let mut c = SimConfig::default().with_kind(kind);
    c.workload.rate = rate;
    c.workload.jobs = Some(jobs);
    c.workload.duration_s = 1e9;
    c
}

#[test]
fn builtin_catalog_shape() {
    let cat = builtin_workflows();
    assert_eq!(cat.dfgs().len(), 4);
    assert_eq!(cat.models().len(), 8);
    let total = cat.total_model_bytes();
    assert!((33 * GB..=37 * GB).contains(&total), "{total}");

    let tr = cat.dfg("translation").unwrap();
    assert_eq!(tr.len(), 5);
    let models: std::collections::BTreeSet<_> = tr.tasks().iter().filter_map(|t| t.model).collect();
    assert_eq!(models.len(), 3);
    assert_eq!(tr.task(tr.exit()).model, None);

    let dl = cat.dfg("dialogue").unwrap();
    assert_eq!(tr.task(tr.entry()).model, dl.task(dl.entry()).model);

    for d in cat.dfgs() {
        let lb = compute_lower_bound(d);
        assert!((1.0..=3.0).contains(&lb), "{} idles at {lb} s", d.id());
    }
}

#[test]
fn every_scheduler_finishes_every_job_cleanly() {
    for kind in SchedulerKind::ALL {
        let r = run_simulation(&small(kind, 2.0, 150)).unwrap();
        assert_eq!(r.jobs.len(), 150, "{kind}");
        assert!(r.audit.is_clean(), "{kind}: {:?}", r.audit.violations);
        assert!(r.jobs.iter().all(|j| j.latency_s >= j.lower_bound_s), "{kind}");
        let ws = &r.workers;
        assert!(ws.iter().all(|w| w.fetches == w.misses), "{kind}");
    }
}

#[test]
fn single_worker_makes_placement_irrelevant() {
    // Jobs spaced out so queue order never matters.
    let cat = builtin_workflows();
    let jobs: Vec<JobInstance> = (0..40)
        .map(|i| JobInstance {
            job_id: i,
            dfg_id: cat.dfgs()[i as usize % 4].id().to_string(),
            arrival_s: i as f64 * 4.0,
            origin_worker: 0,
        })
        .collect();
    let latencies = |kind| {
        let mut c = SimConfig::default().with_kind(kind);
        c.cluster.workers = 1;
        let r = simulate(&c, &cat, &jobs).unwrap();
        r.jobs.iter().map(|j| j.latency_s).collect::<Vec<_>>()
    };
    let reference = latencies(SchedulerKind::Compass);
    for kind in [SchedulerKind::Jit, SchedulerKind::Heft, SchedulerKind::Hash] {
        assert_eq!(latencies(kind), reference, "{kind}");
    }
}

#[test]
fn faster_worker_attracts_work() {
    let mut c = small(SchedulerKind::Compass, 0.2, 60);
    c.cluster.workers = 2;
    c.cluster.runtimes = RuntimeModel { multipliers: vec![3.0, 1.0] };
    let r = run_simulation(&c).unwrap();
    assert!(r.workers[1].tasks_executed > r.workers[0].tasks_executed, "{:?}", r.workers);
    assert!(r.audit.is_clean());
}

#[test]
fn results_round_trip_through_files() {
    let r = run_simulation(&small(SchedulerKind::Compass, 1.0, 80)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_results(&r, dir.path()).unwrap();
    assert_eq!(read_jobs(&dir.path().join("jobs.csv")).unwrap(), r.jobs);
    assert_eq!(read_workers(&dir.path().join("workers.csv")).unwrap(), r.workers);
    let summary = read_summary(&dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary, summarize_result(&r));
    let meta = fs::read_to_string(dir.path().join("run_meta.txt")).unwrap();
    assert!(meta.contains(&format!("config_hash={}", r.config_hash)));
}

#[test]
fn trace_replay_follows_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    fs::write(&path, "arrival_s,dfg_id\n0.0,dialogue\n1.0,translation\n1.0,perception_3d\n4.0,image_reading\n")
        .unwrap();
    let cat = builtin_workflows();
    let jobs = parse_trace(&path, 2.0, &cat).unwrap();
    let times: Vec<f64> = jobs.iter().map(|j| j.arrival_s).collect();
    assert_eq!(times, [0.0, 2.0, 2.0, 8.0]);

    let mut c = SimConfig::default();
    c.workload.mode = WorkloadMode::Trace;
    c.workload.trace_path = Some(path);
    c.workload.rescale = 2.0;
    let r = run_simulation(&c).unwrap();
    let ids: Vec<&str> = r.jobs.iter().map(|j| j.dfg_id.as_str()).collect();
    assert_eq!(ids, ["dialogue", "translation", "perception_3d", "image_reading"]);
    assert_eq!(r.jobs[3].arrival_s, 8.0);
}

#[test]
fn custom_catalog_file_drives_the_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain.dfg");
    fs::write(
        &path,
        "[model]\nid = 0\nname = tiny\nsize_bytes = 1000000\n\n\
         [dfg]\nid = chain\n\
         task a model=tiny runtime_s=0.2 input_bytes=10 output_bytes=10\n\
         task b runtime_s=0.3 input_bytes=10 output_bytes=10\n\
         a -> b\n",
    )
    .unwrap();
    let mut c = small(SchedulerKind::Compass, 0.5, 20);
    c.dfg_file = Some(path);
    let r = run_simulation(&c).unwrap();
    assert_eq!(r.jobs.len(), 20);
    assert!(r.jobs.iter().all(|j| j.dfg_id == "chain" && (j.lower_bound_s - 0.5).abs() < 1e-9));
}

#[test]
fn seed_changes_the_workload() {
    let a = run_simulation(&small(SchedulerKind::Compass, 1.0, 50)).unwrap();
    let mut c = small(SchedulerKind::Compass, 1.0, 50);
    c.seed += 1;
    let b = run_simulation(&c).unwrap();
    assert_ne!(a.jobs, b.jobs);
    assert_ne!(a.config_hash, b.config_hash);
}
