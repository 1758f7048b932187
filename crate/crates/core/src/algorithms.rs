//! Extract-min programs written against the suboperation VM, plus workload
//! files and seeded workload generators.
//!
//! Register use is fixed so traces stay stable:
//!
//! * two-pass: `p1` walks and accumulates, `p2` is the pairing partner.
//! * multipass: as two-pass, plus `p3` remembering the leftmost root of the
//!   current pass.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forest::NodeId;
use crate::key::{Delta, Key};
use crate::rank::RankParams;
use crate::trace::{format_operation, parse_operation, ParseError, RecordItem, Recording};
use crate::vm::{CostAccount, ExtractMinOutcome, Operation, PureHeap, SubopReturn, Suboperation, VmError};

use Suboperation::*;

/// A deterministic extract-min strategy. It only learns about the forest
/// through the return values of the suboperations it issues.
pub trait ExtractMinProgram {
    fn name(&self) -> &'static str;

    /// Highest register index used.
    fn registers(&self) -> usize;

    /// Issues suboperations on an open session, finishing with `End`.
    fn run(&mut self, vm: &mut PureHeap) -> Result<(), VmError>;
}

fn ask(vm: &mut PureHeap, s: Suboperation) -> Result<bool, VmError> {
    match vm.apply(s)? {
        SubopReturn::Bool(b) => Ok(b),
        other => unreachable!("{s:?} returned {other:?}"),
    }
}

/// Pairs the roots under `p1` and `p2`; the winner ends up under `p1`.
fn pair_roots(vm: &mut PureHeap) -> Result<(), VmError> {
    ask(vm, HasParent(1))?;
    ask(vm, HasParent(2))?;
    if !ask(vm, Compare(1, 2))? {
        vm.apply(Swap(1, 2))?;
    }
    vm.apply(Pair(1, 2))?;
    Ok(())
}

/// Left-to-right pairing pass, then right-to-left accumulation.
#[derive(Debug, Clone, Copy, Default)]
pub struct TwoPass;

impl ExtractMinProgram for TwoPass {
    fn name(&self) -> &'static str {
        "two-pass"
    }

    fn registers(&self) -> usize {
        2
    }

    fn run(&mut self, vm: &mut PureHeap) -> Result<(), VmError> {
        while ask(vm, HasRightSibling(1))? {
            vm.apply(Set(2, 1))?;
            ask(vm, HasRightSibling(2))?;
            vm.apply(MoveToRightSibling(2))?;
            pair_roots(vm)?;
            if !ask(vm, HasRightSibling(1))? {
                break;
            }
            vm.apply(MoveToRightSibling(1))?;
        }
        while ask(vm, HasLeftSibling(1))? {
            vm.apply(Set(2, 1))?;
            ask(vm, HasLeftSibling(2))?;
            vm.apply(MoveToLeftSibling(2))?;
            pair_roots(vm)?;
        }
        ask(vm, HasParent(1))?;
        ask(vm, HasRightSibling(1))?;
        vm.apply(End)?;
        Ok(())
    }
}

/// Repeated left-to-right pairing passes until one root is left.
#[derive(Debug, Clone, Copy, Default)]
pub struct Multipass;

impl ExtractMinProgram for Multipass {
    fn name(&self) -> &'static str {
        "multipass"
    }

    fn registers(&self) -> usize {
        3
    }

    fn run(&mut self, vm: &mut PureHeap) -> Result<(), VmError> {
        while ask(vm, HasRightSibling(1))? {
            let mut first = true;
            loop {
                vm.apply(Set(2, 1))?;
                ask(vm, HasRightSibling(2))?;
                vm.apply(MoveToRightSibling(2))?;
                pair_roots(vm)?;
                if first {
                    vm.apply(Set(3, 1))?;
                    first = false;
                }
                if !ask(vm, HasRightSibling(1))? {
                    break;
                }
                vm.apply(MoveToRightSibling(1))?;
                if !ask(vm, HasRightSibling(1))? {
                    break;
                }
            }
            vm.apply(Set(1, 3))?;
        }
        ask(vm, HasParent(1))?;
        ask(vm, HasLeftSibling(1))?;
        vm.apply(End)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmKind {
    #[default]
    TwoPass,
    Multipass,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 2] = [AlgorithmKind::TwoPass, AlgorithmKind::Multipass];

    pub fn program(self) -> Box<dyn ExtractMinProgram> {
        match self {
            AlgorithmKind::TwoPass => Box::new(TwoPass),
            AlgorithmKind::Multipass => Box::new(Multipass),
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlgorithmKind::TwoPass => "two-pass",
            AlgorithmKind::Multipass => "multipass",
        })
    }
}

impl FromStr for AlgorithmKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "two-pass" => Ok(AlgorithmKind::TwoPass),
            "multipass" => Ok(AlgorithmKind::Multipass),
            _ => Err(format!("unknown algorithm `{s}` (expected two-pass or multipass)")),
        }
    }
}

/// Runs a whole extract-min with `program`.
pub fn extract_min(vm: &mut PureHeap, program: &mut dyn ExtractMinProgram) -> Result<ExtractMinOutcome, VmError> {
    vm.begin_extract_min()?;
    program.run(vm)?;
    vm.finish_extract_min()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workload {
    pub ops: Vec<Operation>,
}

impl FromStr for Workload {
    type Err = ParseError;

    fn from_str(text: &str) -> Result<Self, ParseError> {
        let mut ops = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            ops.push(parse_operation(line).map_err(|message| ParseError { line: i + 1, message })?);
        }
        Ok(Workload { ops })
    }
}

impl fmt::Display for Workload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for op in &self.ops {
            writeln!(f, "{}", format_operation(op))?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WorkloadError {
    #[error("operation {index}: extract-min on an empty heap")]
    EmptyExtractMin { index: usize },
    #[error("operation {index}: {source}")]
    Vm { index: usize, source: VmError },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkloadReport {
    pub algorithm: AlgorithmKind,
    pub operations: usize,
    pub cost: CostAccount,
    pub amortized: f64,
    pub mean_extract_min: f64,
    pub max_extract_min: u64,
    pub extracted: Vec<String>,
}

/// Runs `workload` on a fresh heap. When `record` is set every operation and
/// trace is captured together with a final snapshot.
pub fn run_workload(
    kind: AlgorithmKind,
    params: RankParams,
    rho: usize,
    workload: &Workload,
    record: bool,
) -> Result<(WorkloadReport, Option<Recording>), WorkloadError> {
    let mut vm = PureHeap::new(params, rho);
    let mut program = kind.program();
    let mut recording = record.then(|| Recording::new(params, rho));
    let mut extracted = Vec::new();
    let mut max_em = 0;
    for (index, op) in workload.ops.iter().enumerate() {
        let vmerr = |source| WorkloadError::Vm { index, source };
        let item = match *op {
            Operation::Insert(v) => {
                vm.insert(v).map_err(vmerr)?;
                RecordItem::Insert(v)
            }
            Operation::DecreaseKey(h, d) => {
                vm.decrease_key(h, d).map_err(vmerr)?;
                RecordItem::DecreaseKey(h, d)
            }
            Operation::ExtractMin => {
                if vm.is_empty() {
                    return Err(WorkloadError::EmptyExtractMin { index });
                }
                let out = extract_min(&mut vm, program.as_mut()).map_err(vmerr)?;
                max_em = max_em.max(out.cost);
                extracted.push(out.key.value.to_string());
                RecordItem::ExtractMin(out.trace)
            }
        };
        if let Some(r) = recording.as_mut() {
            r.items.push(item);
        }
    }
    if let Some(r) = recording.as_mut() {
        r.items.push(RecordItem::Snapshot(vm.forest().structure_code()));
    }
    let cost = vm.cost().clone();
    let ops = workload.ops.len();
    let report = WorkloadReport {
        algorithm: kind,
        operations: ops,
        amortized: if ops == 0 { 0.0 } else { cost.total() as f64 / ops as f64 },
        mean_extract_min: if cost.extract_mins == 0 {
            0.0
        } else {
            cost.extractmin_subops as f64 / cost.extract_mins as f64
        },
        max_extract_min: max_em,
        extracted,
        cost,
    };
    Ok((report, recording))
}

/// `n` inserts of distinct random keys followed by `n` extract-mins.
pub fn sort_workload(n: usize, seed: u64) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ops: Vec<Operation> = (0..n).map(|_| Operation::Insert(rng.gen_range(-1_000_000..1_000_000))).collect();
    ops.extend(std::iter::repeat_n(Operation::ExtractMin, n));
    Workload { ops }
}

/// Mixture of inserts, decrease-keys on random live handles and
/// extract-mins, shaped like a shortest-path computation. Ends by draining
/// the heap.
pub fn dijkstra_workload(n: usize, seed: u64) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut live: Vec<(Key, u32)> = Vec::new();
    let mut ops = Vec::new();
    let mut next = 0u32;
    let mut inserted = 0;
    while inserted < n || !live.is_empty() {
        let roll: f64 = rng.gen();
        if inserted < n && (live.is_empty() || roll < 0.4) {
            let v = rng.gen_range(0..1_000_000);
            ops.push(Operation::Insert(v));
            live.push((Key::new(v, next as u64), next));
            next += 1;
            inserted += 1;
        } else if roll < 0.75 && !live.is_empty() {
            let i = rng.gen_range(0..live.len());
            let d = rng.gen_range(0..1000);
            let key = live[i].0.decreased(Delta::Finite(d)).expect("keys stay far from overflow");
            live[i].0 = key;
            ops.push(Operation::DecreaseKey(NodeId(live[i].1), Delta::Finite(d)));
        } else {
            let (i, _) = live.iter().enumerate().min_by_key(|(_, e)| e.0).expect("nonempty");
            live.swap_remove(i);
            ops.push(Operation::ExtractMin);
        }
    }
    Workload { ops }
}
