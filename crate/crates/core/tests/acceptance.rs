//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Exits 0 even when a criterion fails so the workspace test run stays usable;
//! set `ACCEPTANCE_STRICT=1` to turn any FAIL into a nonzero exit.

use std::collections::BTreeMap;
use std::fs;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use dagsched_core::cost::LinkParams;
use dagsched_core::experiments::{scale_workers, STALENESS_S};
use dagsched_core::metrics::{median, mean, summarize_result};
use dagsched_core::monitor::{SstRow, SstView};
use dagsched_core::sched::{plan_job, Env, PlanContext};
use dagsched_core::{
    compute_ranks, expand_preset, run_simulation, write_results, Catalog, Dfg, EvictionPolicy, ModelSpec,
    PenaltyMode, PresetOverrides, RuntimeModel, SchedulerConfig, SchedulerKind, SimConfig, SimResult,
    TaskSpec,
};

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Everything simulated by the suite, for the suite-wide properties.
#[derive(Default)]
struct Ledger {
    runs: usize,
    jobs: usize,
    sdf_below_one: usize,
    min_sdf: f64,
    audit_events: usize,
    audit_violations: usize,
    first_violation: Option<String>,
}

impl Ledger {
    fn absorb(&mut self, r: &SimResult) {
        if self.runs == 0 {
            self.min_sdf = f64::INFINITY;
        }
        self.runs += 1;
        self.jobs += r.jobs.len();
        for j in &r.jobs {
            self.min_sdf = self.min_sdf.min(j.slow_down_factor);
            if j.latency_s < j.lower_bound_s {
                self.sdf_below_one += 1;
            }
        }
        self.audit_events += r.audit.events_checked;
        self.audit_violations += r.audit.violations.len();
        if self.first_violation.is_none() {
            self.first_violation = r.audit.violations.first().cloned();
        }
    }
}

fn run_all(configs: Vec<SimConfig>, ledger: &mut Ledger) -> Vec<SimResult> {
    let results: Vec<SimResult> =
        configs.par_iter().map(|c| run_simulation(c).expect("simulation failed")).collect();
    for r in &results {
        ledger.absorb(r);
    }
    results
}

fn preset(name: &str) -> Vec<(String, SimConfig)> {
    expand_preset(name, &SimConfig::default(), &PresetOverrides::default()).unwrap().runs
}

fn with_seed(c: &SimConfig, seed: u64) -> SimConfig {
    let mut c = c.clone();
    c.seed = seed;
    c
}

/// Runs every labelled config under every seed. Returns per-label pooled
/// slow-down factors, pooled latencies and summed cache counters.
struct Pooled {
    sdf: Vec<f64>,
    latency: Vec<f64>,
    hits: u64,
    misses: u64,
}

impl Pooled {
    fn median_sdf(&self) -> f64 {
        median(&self.sdf)
    }

    fn mean_latency(&self) -> f64 {
        mean(&self.latency)
    }

    fn hit_rate(&self) -> f64 {
        self.hits as f64 / (self.hits + self.misses).max(1) as f64
    }
}

fn pooled(runs: &[(String, SimConfig)], seeds: &[u64], ledger: &mut Ledger) -> BTreeMap<String, Pooled> {
    let mut configs = Vec::new();
    let mut labels = Vec::new();
    for (label, c) in runs {
        for &s in seeds {
            configs.push(with_seed(c, s));
            labels.push(label.clone());
        }
    }
    let results = run_all(configs, ledger);
    let mut out: BTreeMap<String, Pooled> = BTreeMap::new();
    for (label, r) in labels.into_iter().zip(&results) {
        let p = out.entry(label).or_insert(Pooled { sdf: vec![], latency: vec![], hits: 0, misses: 0 });
        p.sdf.extend(r.jobs.iter().map(|j| j.slow_down_factor));
        p.latency.extend(r.jobs.iter().map(|j| j.latency_s));
        for (_, c) in &r.dfg_cache {
            p.hits += c.hits;
            p.misses += c.misses;
        }
    }
    out
}

// ---- criterion 1: planning oracle ----

struct Case {
    catalog: Catalog,
    dfg: Dfg,
    runtimes: RuntimeModel,
    link: LinkParams,
    rows: Vec<SstRow>,
    now: f64,
    release: f64,
    cfg: SchedulerConfig,
}

fn random_dag(rng: &mut ChaCha8Rng, n: usize, models: u32) -> Dfg {
    let tasks: Vec<TaskSpec> = (0..n)
        .map(|i| TaskSpec {
            id: format!("t{i}"),
            model: if rng.gen_bool(0.8) { Some(rng.gen_range(0..models) as u8) } else { None },
            runtime_s: rng.gen_range(0.01..3.0),
            input_bytes: rng.gen_range(0..50_000_000),
            output_bytes: rng.gen_range(0..50_000_000),
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.4) {
                edges.push((i, j));
            }
        }
    }
    for j in 1..n {
        if !edges.iter().any(|&(_, b)| b == j) {
            edges.push((rng.gen_range(0..j), j));
        }
    }
    for i in 0..n.saturating_sub(1) {
        if !edges.iter().any(|&(a, _)| a == i) {
            edges.push((i, rng.gen_range(i + 1..n)));
        }
    }
    let named: Vec<(String, String)> = edges.iter().map(|&(a, b)| (format!("t{a}"), format!("t{b}"))).collect();
    Dfg::new("case", tasks, &named).unwrap()
}

fn random_case(rng: &mut ChaCha8Rng) -> Case {
    const GB: u64 = 1_000_000_000;
    let nm = rng.gen_range(1..=4u32);
    let models: Vec<ModelSpec> =
        (0..nm).map(|m| ModelSpec::new(m, format!("m{m}"), rng.gen_range(GB / 2..6 * GB)).unwrap()).collect();
    let n = rng.gen_range(1..=5);
    let dfg = random_dag(rng, n, nm);
    let catalog = Catalog::new(models, vec![dfg.clone()]).unwrap();
    let workers = rng.gen_range(1..=3);
    let runtimes = if rng.gen_bool(0.5) {
        RuntimeModel::homogeneous()
    } else {
        RuntimeModel { multipliers: (0..workers).map(|_| rng.gen_range(0.5..2.0)).collect() }
    };
    let link = LinkParams {
        network_bandwidth_bps: rng.gen_range(1e8..1e10),
        delta_network_s: rng.gen_range(0.0..0.01),
        pcie_bandwidth_bps: rng.gen_range(1e9..1.6e10),
        delta_pcie_s: rng.gen_range(0.0..0.1),
    };
    let now = rng.gen_range(0.0..10.0);
    let rows = (0..workers)
        .map(|w| SstRow {
            worker: w,
            queue_finish_time: if rng.gen_bool(0.3) { 0.0 } else { now + rng.gen_range(0.0..5.0) },
            cache_bitmap: rng.gen_range(0..1u64 << nm),
            available_cache: rng.gen_range(0..12 * GB),
            publish_time: now,
            cache_publish_time: now,
        })
        .collect();
    let mut cfg = SchedulerConfig::new(SchedulerKind::Compass);
    cfg.model_locality = rng.gen_bool(0.8);
    cfg.penalty = if rng.gen_bool(0.5) {
        PenaltyMode::Proportional(rng.gen_range(0.0..2.0))
    } else {
        PenaltyMode::Constant(rng.gen_range(0.0..3.0))
    };
    Case { catalog, dfg, runtimes, link, rows, now, release: now + rng.gen_range(0.0..0.5), cfg }
}

/// Longest downstream path by enumeration, summed from the exit backwards.
fn oracle_rank(dfg: &Dfg, t: usize, r: &[f64], td: &[f64], memo: &mut [Option<f64>]) -> f64 {
    if let Some(v) = memo[t] {
        return v;
    }
    let mut best: Option<f64> = None;
    for &s in dfg.succs(t) {
        let v = td[t] + oracle_rank(dfg, s, r, td, memo);
        best = Some(best.map_or(v, |b: f64| b.max(v)));
    }
    let v = r[t] + best.unwrap_or(0.0);
    memo[t] = Some(v);
    v
}

fn oracle_plan(c: &Case) -> Vec<usize> {
    let dfg = &c.dfg;
    let n = dfg.len();
    let workers = c.rows.len();
    let rt = |t: usize, w: usize| dfg.task(t).runtime_s * c.runtimes.multiplier(w);
    let avg: Vec<f64> = (0..n)
        .map(|t| {
            if c.runtimes.multipliers.is_empty() {
                dfg.task(t).runtime_s
            } else {
                dfg.task(t).runtime_s * c.runtimes.multipliers.iter().sum::<f64>() / workers as f64
            }
        })
        .collect();
    let td: Vec<f64> =
        (0..n).map(|t| dfg.task(t).output_bytes as f64 / c.link.network_bandwidth_bps + c.link.delta_network_s).collect();
    let mut memo = vec![None; n];
    let rank: Vec<f64> = (0..n).map(|t| oracle_rank(dfg, t, &avg, &td, &mut memo)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| rank[b].partial_cmp(&rank[a]).unwrap().then(a.cmp(&b)));

    let mut ft: Vec<f64> = c.rows.iter().map(|r| r.queue_finish_time.max(c.now)).collect();
    let mut pend = vec![0u64; workers];
    let mut pend_bytes = vec![0u64; workers];
    let mut place = vec![usize::MAX; n];
    let mut finish = vec![0.0; n];
    for t in order {
        let task = dfg.task(t);
        let mut best = (usize::MAX, f64::INFINITY);
        for w in 0..workers {
            let mut at = if dfg.preds(t).is_empty() { c.release } else { f64::NEG_INFINITY };
            for &p in dfg.preds(t) {
                assert_ne!(place[p], usize::MAX, "rank order visited a successor first");
                let x = if place[p] == w { 0.0 } else { td[p] };
                at = at.max(finish[p] + x);
            }
            let fetch = match task.model {
                Some(m) if c.cfg.model_locality && (c.rows[w].cache_bitmap | pend[w]) & (1 << m) == 0 => {
                    let size = c.catalog.model(m).size_bytes;
                    let base = size as f64 / c.link.pcie_bandwidth_bps + c.link.delta_pcie_s;
                    if size > c.rows[w].available_cache.saturating_sub(pend_bytes[w]) {
                        base + match c.cfg.penalty {
                            PenaltyMode::Proportional(f) => f * base,
                            PenaltyMode::Constant(k) => k,
                        }
                    } else {
                        base
                    }
                }
                _ => 0.0,
            };
            let score = ft[w].max(at) + fetch + rt(t, w);
            if score < best.1 {
                best = (w, score);
            }
        }
        let (w, f) = best;
        place[t] = w;
        finish[t] = f;
        ft[w] = f;
        if let Some(m) = task.model {
            if c.cfg.model_locality && (c.rows[w].cache_bitmap | pend[w]) & (1 << m) == 0 {
                pend[w] |= 1 << m;
                pend_bytes[w] += c.catalog.model(m).size_bytes;
            }
        }
    }
    place
}

fn planning_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c1e);
    let mut mismatches = 0;
    let mut first = None;
    for i in 0..100 {
        let c = random_case(&mut rng);
        let workers = c.rows.len();
        let env = Env { catalog: &c.catalog, runtimes: &c.runtimes, link: &c.link, workers };
        let ranks = compute_ranks(&c.dfg, &c.runtimes, workers, &c.link);
        let view = SstView { rows: c.rows.clone() };
        let mut ctx = PlanContext::new(&view, c.now, c.release, c.dfg.len());
        let adfg = plan_job(i, &c.dfg, &ranks, &mut ctx, &env, &c.cfg).unwrap();
        let expect = oracle_plan(&c);
        if adfg.assignment != expect {
            mismatches += 1;
            first.get_or_insert(format!("case {i}: got {:?}, oracle {:?}", adfg.assignment, expect));
        }
    }
    let mut d = format!("100 cases, {mismatches} mismatches");
    if let Some(f) = first {
        d += &format!("; {f}");
    }
    outcome(mismatches == 0, d)
}

// ---- criterion 2: rank oracle ----

fn all_paths(dfg: &Dfg, t: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    path.push(t);
    if dfg.succs(t).is_empty() {
        out.push(path.clone());
    }
    for &s in dfg.succs(t) {
        all_paths(dfg, s, path, out);
    }
    path.pop();
}

fn rank_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4a2c);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=8);
        let dfg = random_dag(&mut rng, n, 1);
        let link = LinkParams {
            network_bandwidth_bps: rng.gen_range(1e8..1e10),
            delta_network_s: rng.gen_range(0.0..0.01),
            ..LinkParams::default()
        };
        let ranks = compute_ranks(&dfg, &RuntimeModel::homogeneous(), 3, &link);
        for t in 0..n {
            let mut paths = Vec::new();
            all_paths(&dfg, t, &mut Vec::new(), &mut paths);
            let best = paths
                .iter()
                .map(|p| {
                    let mut v = 0.0;
                    for (k, &x) in p.iter().enumerate() {
                        v += dfg.task(x).runtime_s;
                        if k + 1 < p.len() {
                            v += dfg.task(x).output_bytes as f64 / link.network_bandwidth_bps + link.delta_network_s;
                        }
                    }
                    v
                })
                .fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max((best - ranks[t]).abs());
        }
    }
    outcome(worst <= 1e-9, format!("100 DAGs, max abs error {worst:.3e} s"))
}

// ---- simulation criteria ----

fn low_load(ledger: &mut Ledger) -> Outcome {
    let p = pooled(&preset("low_load"), &SEEDS, ledger);
    let m = |k: &str| p[k].median_sdf();
    let c = m("compass");
    let pass = c <= m("jit") && c <= m("heft") && c <= m("hash") && c <= 1.5;
    outcome(
        pass,
        format!(
            "median sdf compass {:.3}, jit {:.3}, heft {:.3}, hash {:.3} (need compass lowest and <= 1.5)",
            c,
            m("jit"),
            m("heft"),
            m("hash")
        ),
    )
}

fn high_load(p: &BTreeMap<String, Pooled>) -> Outcome {
    let l = |k: &str| p[k].mean_latency();
    let (c, j, he, ha) = (l("compass"), l("jit"), l("heft"), l("hash"));
    let (rh, rs) = (he / c, ha / c);
    let ordered = c < j && j < he && j < ha;
    let in_band = |r: f64| (2.0..=30.0).contains(&r);
    let pass = ordered && in_band(rh) && in_band(rs);
    outcome(
        pass,
        format!(
            "mean latency compass {c:.3} s, jit {j:.3} s, heft {he:.3} s, hash {ha:.3} s; \
             heft/compass {rh:.2}, hash/compass {rs:.2} (need ordering and ratios in [2, 30])"
        ),
    )
}

fn ablation_runs() -> Vec<(String, SimConfig)> {
    let mut runs = preset("ablation");
    let mut low_lookahead = SimConfig::default();
    low_lookahead.workload.jobs = Some(500);
    low_lookahead.workload.duration_s = 1e9;
    low_lookahead.workload.rate = 0.5;
    let mut low_fifo = low_lookahead.clone();
    low_fifo.cluster.eviction = EvictionPolicy::Fifo;
    runs.push(("low_lookahead".into(), low_lookahead));
    runs.push(("low_fifo".into(), low_fifo));
    runs
}

fn hit_rate(p: &BTreeMap<String, Pooled>) -> Outcome {
    let full = &p["full"];
    let off = &p["no_model_locality"];
    let drop = full.hit_rate() - off.hit_rate();
    let slow = off.median_sdf() / full.median_sdf();
    let pass = full.hit_rate() >= 0.95 && drop >= 0.05 && slow >= 2.0;
    outcome(
        pass,
        format!(
            "hit rate {:.4}, without locality {:.4} (drop {:.1} pp); median sdf {:.3} vs {:.3} ({slow:.2}x, need >= 2)",
            full.hit_rate(),
            off.hit_rate(),
            drop * 100.0,
            off.median_sdf(),
            full.median_sdf()
        ),
    )
}

fn adjustment(p: &BTreeMap<String, Pooled>) -> Outcome {
    let full = p["full"].median_sdf();
    let off = p["no_dynamic_adjustment"].median_sdf();
    let r = off / full;
    outcome(r >= 1.5, format!("median sdf without adjustment {off:.3} vs {full:.3} ({r:.2}x, need >= 1.5)"))
}

fn eviction(p: &BTreeMap<String, Pooled>) -> Outcome {
    let (la, fifo) = (p["full"].hit_rate(), p["fifo_eviction"].hit_rate());
    let (lla, lfifo) = (p["low_lookahead"].hit_rate(), p["low_fifo"].hit_rate());
    outcome(
        la >= fifo,
        format!("high load: lookahead {la:.4}, fifo {fifo:.4}; low load: lookahead {lla:.4}, fifo {lfifo:.4}"),
    )
}

fn staleness(ledger: &mut Ledger) -> Outcome {
    let p = pooled(&preset("staleness_sweep"), &SEEDS, ledger);
    let at = |li: f64, ci: f64| p[&format!("load_{li}_cache_{ci}")].median_sdf();
    let load: Vec<f64> = STALENESS_S.iter().map(|&x| at(x, 0.2)).collect();
    let cache: Vec<f64> = STALENESS_S.iter().map(|&x| at(0.2, x)).collect();
    let monotone = load.windows(2).all(|w| w[1] >= w[0]);
    let ratio = load[3] / load[0];
    let deg_load: Vec<f64> = load.iter().map(|v| v / load[0]).collect();
    let deg_cache: Vec<f64> = cache.iter().map(|v| v / cache[0]).collect();
    let smaller = (1..STALENESS_S.len()).all(|i| deg_cache[i] < deg_load[i]);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ");
    outcome(
        monotone && ratio >= 1.2 && smaller,
        format!(
            "load sweep [{}] (1.0 s / 0.1 s = {ratio:.2}); degradation load [{}] vs cache [{}]",
            fmt(&load),
            fmt(&deg_load[1..]),
            fmt(&deg_cache[1..])
        ),
    )
}

fn scalability(ledger: &mut Ledger) -> Outcome {
    let runs = preset("scalability");
    let configs: Vec<SimConfig> = runs.iter().map(|(_, c)| c.clone()).collect();
    let results = run_all(configs, ledger);
    let mut sdf: BTreeMap<(SchedulerKind, usize), f64> = BTreeMap::new();
    let mut active: BTreeMap<(SchedulerKind, usize), usize> = BTreeMap::new();
    for ((_, c), r) in runs.iter().zip(&results) {
        let key = (c.scheduler.kind, c.cluster.workers);
        let overall = summarize_result(r).pop().expect("jobs completed");
        sdf.insert(key, overall.slow_down.median);
        active.insert(key, overall.active_workers);
    }
    let sizes = scale_workers();
    let largest = *sizes.last().unwrap();
    let knee = |k: SchedulerKind| {
        let target = sdf[&(k, largest)];
        sizes.iter().copied().find(|&w| (sdf[&(k, w)] - target).abs() <= 0.1 * target).unwrap()
    };
    let (nc, nh) = (knee(SchedulerKind::Compass), knee(SchedulerKind::Hash));
    let (ac, ah) = (active[&(SchedulerKind::Compass, 150)], active[&(SchedulerKind::Hash, 150)]);
    outcome(
        nc as f64 <= 0.6 * nh as f64 && ac < ah,
        format!("N_compass {nc}, N_hash {nh}; active workers at 150: compass {ac}, hash {ah}"),
    )
}

fn determinism(ledger: &mut Ledger) -> Outcome {
    let runs = preset("low_load");
    let tmp = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    for (label, c) in &runs {
        let a = run_simulation(c).unwrap();
        let b = run_simulation(c).unwrap();
        ledger.absorb(&a);
        ledger.absorb(&b);
        let (da, db) = (tmp.path().join(format!("{label}_a")), tmp.path().join(format!("{label}_b")));
        write_results(&a, &da).unwrap();
        write_results(&b, &db).unwrap();
        for f in ["jobs.csv", "summary.csv"] {
            if fs::read(da.join(f)).unwrap() != fs::read(db.join(f)).unwrap() {
                differing.push(format!("{label}/{f}"));
            }
        }
    }
    outcome(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} runs repeated, outputs byte-identical", runs.len())
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

fn main() {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut ledger = Ledger::default();
    let mut results: Vec<(u32, &str, Outcome, Duration, Option<Duration>)> = Vec::new();
    let mut timed = |n: u32, name: &'static str, limit: Option<u64>, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        results.push((n, name, o, t.elapsed(), limit.map(Duration::from_secs)));
    };

    timed(1, "planning oracle", Some(5), &mut || planning_oracle());
    timed(2, "rank oracle", Some(1), &mut || rank_oracle());
    timed(4, "low-load ordering", Some(30), &mut || low_load(&mut ledger));
    timed(5, "high-load speedup", None, &mut || high_load(&pooled(&preset("high_load"), &SEEDS, &mut ledger)));
    let abl = pooled(&ablation_runs(), &SEEDS, &mut ledger);
    timed(6, "cache hit rate", None, &mut || hit_rate(&abl));
    timed(7, "dynamic-adjustment ablation", None, &mut || adjustment(&abl));
    timed(8, "eviction-policy ablation", None, &mut || eviction(&abl));
    timed(9, "staleness sensitivity", None, &mut || staleness(&mut ledger));
    timed(10, "scalability", Some(300), &mut || scalability(&mut ledger));
    timed(11, "determinism", None, &mut || determinism(&mut ledger));
    let l = &ledger;
    timed(3, "lower-bound property", None, &mut || {
        outcome(
            l.sdf_below_one == 0 && l.min_sdf >= 1.0,
            format!("{} runs, {} jobs, minimum sdf {:.6}, {} below bound", l.runs, l.jobs, l.min_sdf, l.sdf_below_one),
        )
    });
    timed(12, "causality audit", None, &mut || {
        let mut d = format!("{} runs, {} trace events, {} violations", l.runs, l.audit_events, l.audit_violations);
        if let Some(v) = &l.first_violation {
            d += &format!("; first: {v}");
        }
        outcome(l.audit_violations == 0, d)
    });

    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (n, name, o, took, limit) in &results {
        let over = limit.is_some_and(|l| *took > l);
        let pass = o.pass && !over;
        if !pass {
            failed += 1;
        }
        let mut line = format!(
            "{} criterion {n:>2} {name}: {} [{:.2}s",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64()
        );
        if let Some(l) = limit {
            line += &format!(", limit {}s", l.as_secs());
        }
        line += "]";
        if over {
            line += " over time limit";
        }
        println!("{line}");
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
