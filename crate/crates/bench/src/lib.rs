//! Fixed inputs shared by the criterion benches.

use pureheap::algorithms::{dijkstra_workload, sort_workload};
use pureheap::{AdversaryConfig, AlgorithmKind, Mode, Workload};

pub const SIZES: [usize; 3] = [256, 1024, 4096];

pub fn workloads(n: usize) -> [(&'static str, Workload); 2] {
    [("sort", sort_workload(n, 1)), ("dijkstra", dijkstra_workload(n, 1))]
}

pub fn ledger_config(algorithm: AlgorithmKind, n: usize) -> AdversaryConfig {
    AdversaryConfig {
        n,
        k: n / 4,
        algorithm,
        mode: Mode::Ledger,
        ..Default::default()
    }
}
