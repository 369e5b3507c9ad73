//! Workflow graphs (DFGs), task and model profiles, job instances and
//! their activated assignment maps.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use crate::cost::LinkParams;
use crate::error::{Error, Result};

/// Model ids index a 64-bit residency bitmap.
pub type ModelId = u8;
pub type WorkerId = usize;
pub type JobId = u64;

pub const MAX_MODELS: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub id: ModelId,
    pub name: String,
    pub size_bytes: u64,
}

impl ModelSpec {
    pub fn new(id: u32, name: impl Into<String>, size_bytes: u64) -> Result<Self> {
        if id >= MAX_MODELS {
            return Err(Error::ModelIdOutOfRange(id));
        }
        let name = name.into();
        if size_bytes == 0 {
            return Err(Error::InvalidModel(format!("model `{name}` has zero size")));
        }
        Ok(Self { id: id as ModelId, name, size_bytes })
    }
}

/// Profile of one DFG vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub id: String,
    /// Absent for model-less aggregation tasks.
    pub model: Option<ModelId>,
    /// Profiled mean runtime on a reference worker, seconds.
    pub runtime_s: f64,
    pub input_bytes: u64,
    pub output_bytes: u64,
}

/// A validated workflow graph: acyclic, one entry, one exit.
///
/// Tasks keep their declaration order; that order is the tie-breaker wherever
/// two tasks are otherwise indistinguishable.
#[derive(Debug, Clone)]
pub struct Dfg {
    id: String,
    tasks: Vec<TaskSpec>,
    edges: Vec<(usize, usize)>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    topo: Vec<usize>,
    entry: usize,
    exit: usize,
}

impl Dfg {
    /// Builds and validates a DFG. Edges name tasks by id.
    pub fn new<S: AsRef<str>>(
        id: impl Into<String>,
        tasks: Vec<TaskSpec>,
        edges: &[(S, S)],
    ) -> Result<Self> {
        let id = id.into();
        let mut index = BTreeMap::new();
        for (i, t) in tasks.iter().enumerate() {
            if !(t.runtime_s > 0.0) || !t.runtime_s.is_finite() {
                return Err(Error::InvalidTask {
                    dfg: id,
                    task: t.id.clone(),
                    reason: format!("runtime must be positive, got {}", t.runtime_s),
                });
            }
            if index.insert(t.id.as_str(), i).is_some() {
                return Err(Error::InvalidTask {
                    dfg: id,
                    task: t.id.clone(),
                    reason: "duplicate task id".into(),
                });
            }
        }

        let mut edge_set = BTreeSet::new();
        let mut edge_list = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            let (a, b) = (a.as_ref(), b.as_ref());
            let (Some(&from), Some(&to)) = (index.get(a), index.get(b)) else {
                return Err(Error::DanglingEdge { dfg: id, from: a.into(), to: b.into() });
            };
            if edge_set.insert((from, to)) {
                edge_list.push((from, to));
            }
        }

        let n = tasks.len();
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for &(a, b) in &edge_list {
            succs[a].push(b);
            preds[b].push(a);
        }
        for v in preds.iter_mut().chain(succs.iter_mut()) {
            v.sort_unstable();
        }

        // Kahn's algorithm; ties resolved by declaration order.
        let mut indeg: Vec<usize> = preds.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<usize>> =
            (0..n).filter(|&i| indeg[i] == 0).map(Reverse).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(Reverse(i)) = ready.pop() {
            topo.push(i);
            for &s in &succs[i] {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    ready.push(Reverse(s));
                }
            }
        }
        if topo.len() != n {
            let stuck = (0..n).find(|&i| indeg[i] > 0).expect("unvisited task");
            return Err(Error::Cycle { dfg: id, task: tasks[stuck].id.clone() });
        }

        let entries: Vec<usize> = (0..n).filter(|&i| preds[i].is_empty()).collect();
        let exits: Vec<usize> = (0..n).filter(|&i| succs[i].is_empty()).collect();
        let names = |v: &[usize]| v.iter().map(|&i| tasks[i].id.clone()).collect::<Vec<_>>();
        if entries.len() != 1 {
            return Err(Error::MultipleEntries { dfg: id, found: names(&entries) });
        }
        if exits.len() != 1 {
            return Err(Error::MultipleExits { dfg: id, found: names(&exits) });
        }

        Ok(Self {
            id,
            entry: entries[0],
            exit: exits[0],
            tasks,
            edges: edge_list,
            preds,
            succs,
            topo,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    pub fn task(&self, i: usize) -> &TaskSpec {
        &self.tasks[i]
    }

    pub fn task_index(&self, id: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.id == id)
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn preds(&self, i: usize) -> &[usize] {
        &self.preds[i]
    }

    pub fn succs(&self, i: usize) -> &[usize] {
        &self.succs[i]
    }

    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn entry(&self) -> usize {
        self.entry
    }

    pub fn exit(&self) -> usize {
        self.exit
    }

    /// A join has more than one direct predecessor.
    pub fn is_join(&self, i: usize) -> bool {
        self.preds[i].len() > 1
    }

    /// Longest path through the graph under the given per-task durations.
    pub fn critical_path<T>(&self, duration: &[T]) -> T
    where
        T: Copy + Default + PartialOrd + std::ops::Add<Output = T>,
    {
        let mut finish = vec![T::default(); self.len()];
        for &i in &self.topo {
            let start = self.preds[i]
                .iter()
                .map(|&p| finish[p])
                .fold(T::default(), |a, b| if b > a { b } else { a });
            finish[i] = start + duration[i];
        }
        finish[self.exit]
    }
}

/// Per-worker runtime model: `R(t, w) = runtime_s(t) * multiplier(w)`.
///
/// An empty multiplier table means a homogeneous cluster.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuntimeModel {
    pub multipliers: Vec<f64>,
}

impl RuntimeModel {
    pub fn homogeneous() -> Self {
        Self::default()
    }

    pub fn multiplier(&self, worker: WorkerId) -> f64 {
        self.multipliers.get(worker).copied().unwrap_or(1.0)
    }

    pub fn runtime(&self, task: &TaskSpec, worker: WorkerId) -> f64 {
        task.runtime_s * self.multiplier(worker)
    }

    /// Average of `R(t, w)` over a cluster of `workers` workers.
    pub fn mean_runtime(&self, task: &TaskSpec, workers: usize) -> f64 {
        if workers == 0 || self.multipliers.is_empty() {
            return task.runtime_s;
        }
        let sum: f64 = (0..workers).map(|w| self.multiplier(w)).sum();
        task.runtime_s * sum / workers as f64
    }
}

/// Upward ranks from explicit per-task runtimes and output-transfer costs:
/// `rank(t) = R(t) + max over successors s of (TD_output(t) + rank(s))`.
pub fn ranks_from(dfg: &Dfg, runtime: &[f64], td_output: &[f64]) -> Vec<f64> {
    let mut rank = vec![0.0; dfg.len()];
    for &i in dfg.topo_order().iter().rev() {
        let tail = dfg
            .succs(i)
            .iter()
            .map(|&s| td_output[i] + rank[s])
            .fold(0.0, f64::max);
        rank[i] = runtime[i] + tail;
    }
    rank
}

/// Ranks every task using worker-averaged runtimes and the network model.
pub fn compute_ranks(
    dfg: &Dfg,
    runtimes: &RuntimeModel,
    workers: usize,
    link: &LinkParams,
) -> Vec<f64> {
    let r: Vec<f64> = dfg.tasks().iter().map(|t| runtimes.mean_runtime(t, workers)).collect();
    let td: Vec<f64> = dfg.tasks().iter().map(|t| link.td_output(t)).collect();
    ranks_from(dfg, &r, &td)
}

/// Task visiting order for planning: descending rank, declaration order on ties.
pub fn rank_order(ranks: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ranks.len()).collect();
    order.sort_by(|&a, &b| ranks[b].total_cmp(&ranks[a]).then(a.cmp(&b)));
    order
}

/// Critical-path runtime with unlimited parallelism and free transfers.
pub fn compute_lower_bound(dfg: &Dfg) -> f64 {
    let r: Vec<f64> = dfg.tasks().iter().map(|t| t.runtime_s).collect();
    dfg.critical_path(&r)
}

/// One triggered execution of a DFG.
#[derive(Debug, Clone, PartialEq)]
pub struct JobInstance {
    pub job_id: JobId,
    pub dfg_id: String,
    pub arrival_s: f64,
    pub origin_worker: WorkerId,
}

/// Activated DFG: the per-job map from task to worker.
#[derive(Debug, Clone, PartialEq)]
pub struct Adfg {
    pub job_id: JobId,
    pub assignment: Vec<WorkerId>,
    /// Planner's estimate of each task's finish time, seconds.
    pub est_finish: Vec<f64>,
}

/// Models plus the DFGs that reference them.
#[derive(Debug, Clone)]
pub struct Catalog {
    models: Vec<ModelSpec>,
    dfgs: Vec<Dfg>,
}

impl Catalog {
    pub fn new(mut models: Vec<ModelSpec>, dfgs: Vec<Dfg>) -> Result<Self> {
        models.sort_by_key(|m| m.id);
        for w in models.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::InvalidModel(format!("duplicate model id {}", w[0].id)));
            }
        }
        let mut seen = BTreeSet::new();
        for d in &dfgs {
            if !seen.insert(d.id()) {
                return Err(Error::InvalidTask {
                    dfg: d.id().into(),
                    task: String::new(),
                    reason: "duplicate dfg id".into(),
                });
            }
            for t in d.tasks() {
                if let Some(m) = t.model {
                    if models.binary_search_by_key(&m, |x| x.id).is_err() {
                        return Err(Error::InvalidTask {
                            dfg: d.id().into(),
                            task: t.id.clone(),
                            reason: format!("references undefined model id {m}"),
                        });
                    }
                }
            }
        }
        Ok(Self { models, dfgs })
    }

    pub fn models(&self) -> &[ModelSpec] {
        &self.models
    }

    pub fn model(&self, id: ModelId) -> &ModelSpec {
        let i = self.models.binary_search_by_key(&id, |m| m.id).expect("validated model id");
        &self.models[i]
    }

    pub fn model_by_name(&self, name: &str) -> Option<&ModelSpec> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn dfgs(&self) -> &[Dfg] {
        &self.dfgs
    }

    pub fn dfg_index(&self, id: &str) -> Option<usize> {
        self.dfgs.iter().position(|d| d.id() == id)
    }

    pub fn dfg(&self, id: &str) -> Option<&Dfg> {
        self.dfgs.iter().find(|d| d.id() == id)
    }

    pub fn total_model_bytes(&self) -> u64 {
        self.models.iter().map(|m| m.size_bytes).sum()
    }
}
