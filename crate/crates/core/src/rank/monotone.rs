//! Replays an operation log and checks that ranks never decrease.
//!
//! The designated minimum root at any moment is the root an extract-min would
//! remove next, i.e. the root holding the smallest key. A decrease-key is
//! admissible when its target is a root, a child of that root, or marked.
//! Ranks are sampled at operation boundaries. A node stops being tracked once
//! it is the designated minimum root and one of its children is cut.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::algorithms::{extract_min, AlgorithmKind};
use crate::forest::NodeId;
use crate::key::Delta;
use crate::rank::RankParams;
use crate::vm::{Operation, PureHeap, VmError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankDecrease {
    pub node: NodeId,
    /// Index of the operation after which the decrease was observed.
    pub operation: usize,
    pub before: u32,
    pub after: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MonotoneReport {
    pub operations: usize,
    pub decreases: Vec<RankDecrease>,
}

impl MonotoneReport {
    pub fn is_clean(&self) -> bool {
        self.decreases.is_empty()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MonotoneError {
    #[error("operation {index}: decrease-key on {node}, an unmarked internal node outside the designated minimum root")]
    NonMonotonicInput { index: usize, node: NodeId },
    #[error("operation {index}: {source}")]
    Vm { index: usize, source: VmError },
}

/// Replays `ops` on `heap`, running `extract` for each extract-min.
pub fn check_monotone_rank<F>(heap: &mut PureHeap, ops: &[Operation], mut extract: F) -> Result<MonotoneReport, MonotoneError>
where
    F: FnMut(&mut PureHeap) -> Result<(), VmError>,
{
    let mut tracked: HashMap<NodeId, u32> = HashMap::new();
    let mut report = MonotoneReport::default();
    for (index, op) in ops.iter().enumerate() {
        let dmr = heap.min_node();
        match *op {
            Operation::Insert(v) => {
                let id = heap.insert(v).map_err(|source| MonotoneError::Vm { index, source })?;
                tracked.insert(id, 0);
            }
            Operation::DecreaseKey(h, delta) => {
                if let Some(node) = heap.forest().get(h) {
                    let admissible = node.parent.is_none() || node.parent == dmr || node.rank.marked;
                    if !admissible {
                        return Err(MonotoneError::NonMonotonicInput { index, node: h });
                    }
                    if let (Some(p), Some(m)) = (node.parent, dmr) {
                        if p == m {
                            tracked.remove(&m);
                        }
                    }
                }
                heap.decrease_key(h, delta).map_err(|source| MonotoneError::Vm { index, source })?;
            }
            Operation::ExtractMin => {
                extract(heap).map_err(|source| MonotoneError::Vm { index, source })?;
            }
        }
        report.operations += 1;
        tracked.retain(|id, _| heap.forest().is_live(*id));
        let mut ids: Vec<NodeId> = tracked.keys().copied().collect();
        ids.sort();
        for id in ids {
            let now = heap.forest().node(id).rank.rank;
            let before = tracked[&id];
            if now < before {
                report.decreases.push(RankDecrease {
                    node: id,
                    operation: index,
                    before,
                    after: now,
                });
            }
            tracked.insert(id, now.max(before));
        }
    }
    Ok(report)
}

/// A seeded random monotonic sequence of `len` operations that never holds
/// more than `max_nodes` items. It is generated against a live heap running
/// `algorithm`, so every decrease-key targets an admissible node, and every
/// decrease to `-inf` is followed directly by an extract-min.
pub fn random_monotone_sequence(
    max_nodes: usize,
    len: usize,
    algorithm: AlgorithmKind,
    params: RankParams,
    seed: u64,
) -> Result<Vec<Operation>, VmError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut heap = PureHeap::new(params, crate::vm::DEFAULT_RHO);
    let mut program = algorithm.program();
    let mut ops = Vec::with_capacity(len);
    while ops.len() < len {
        let op = if heap.designated_minimum().is_some() {
            Operation::ExtractMin
        } else {
            match rng.gen_range(0..10) {
                0..=3 if heap.len() < max_nodes => Operation::Insert(rng.gen_range(-4..=0)),
                4..=7 if !heap.is_empty() => {
                    let forest = heap.forest();
                    let dmr = heap.min_node();
                    let targets: Vec<NodeId> = forest
                        .live_ids()
                        .filter(|&x| {
                            let n = forest.node(x);
                            n.parent.is_none() || n.parent == dmr || n.rank.marked
                        })
                        .collect();
                    let h = *targets.choose(&mut rng).expect("roots are always admissible");
                    let delta = if rng.gen_ratio(1, 12) {
                        Delta::Infinite
                    } else {
                        Delta::Finite(rng.gen_range(0..=2))
                    };
                    Operation::DecreaseKey(h, delta)
                }
                _ if !heap.is_empty() => Operation::ExtractMin,
                _ => Operation::Insert(0),
            }
        };
        match op {
            Operation::Insert(v) => {
                heap.insert(v)?;
            }
            Operation::DecreaseKey(h, d) => heap.decrease_key(h, d)?,
            Operation::ExtractMin => {
                extract_min(&mut heap, program.as_mut())?;
            }
        }
        ops.push(op);
    }
    Ok(ops)
}
