//! Shared fixtures for unit tests.

use proptest::prelude::*;

use crate::workflow::{Dfg, TaskSpec};

pub(crate) fn task(id: &str, r: f64) -> TaskSpec {
    TaskSpec { id: id.into(), model: None, runtime_s: r, input_bytes: 0, output_bytes: 0 }
}

/// t0 -> {t1, t2} -> t3 with runtimes 2, 4, 3, 1.
pub(crate) fn diamond() -> Dfg {
    let tasks = vec![task("t0", 2.0), task("t1", 4.0), task("t2", 3.0), task("t3", 1.0)];
    Dfg::new("d", tasks, &[("t0", "t1"), ("t0", "t2"), ("t1", "t3"), ("t2", "t3")]).unwrap()
}

/// Random DAG: edges only go from lower to higher index, every task reachable
/// from task 0 and reaching the last task.
pub(crate) fn arb_dag(max: usize) -> impl Strategy<Value = Dfg> {
    (2..=max)
        .prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(1u32..50, n),
                proptest::collection::vec(any::<bool>(), n * n),
            )
        })
        .prop_map(|(n, rts, bits)| {
            let tasks: Vec<_> =
                (0..n).map(|i| task(&format!("t{i}"), rts[i] as f64 / 10.0)).collect();
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if bits[i * n + j] {
                        edges.push((i, j));
                    }
                }
            }
            for j in 1..n {
                if !edges.iter().any(|&(_, b)| b == j) {
                    edges.push((0, j));
                }
            }
            for i in 0..n - 1 {
                if !edges.iter().any(|&(a, _)| a == i) {
                    edges.push((i, n - 1));
                }
            }
            let named: Vec<(String, String)> =
                edges.iter().map(|&(a, b)| (format!("t{a}"), format!("t{b}"))).collect();
            Dfg::new("rand", tasks, &named).unwrap()
        })
}
