//! Enforcing virtual machine for the pure heap model.
//!
//! [`PureHeap`] owns a forest and exposes the three priority-queue operations.
//! Insert and decrease-key are unit cost and happen outside of any session.
//! Extract-min is driven from outside: [`PureHeap::begin_extract_min`] opens a
//! session with `rho` pointer registers (all on the leftmost root), the caller
//! feeds [`Suboperation`]s through [`PureHeap::apply`], and once `End` has been
//! accepted [`PureHeap::finish_extract_min`] removes the single root.
//!
//! Every precondition is checked before any state is touched. A structural
//! suboperation also needs its precondition to have been *certified* by an
//! earlier predicate on the same pointer, and that certificate must still be
//! fresh: it is dropped when the pointer moves, or when any of the links
//! (parent, left sibling, right sibling, leftmost child) of the node it
//! references change.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forest::{Forest, Links, NodeId};
use crate::key::{Delta, Key, KeyValue};
use crate::rank::{self, RankParams};

pub const DEFAULT_RHO: usize = 8;

/// Pointer registers are numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Suboperation {
    HasParent(usize),
    HasLeftSibling(usize),
    HasRightSibling(usize),
    HasChildren(usize),
    Compare(usize, usize),
    Pair(usize, usize),
    Unpair(usize),
    Set(usize, usize),
    Swap(usize, usize),
    MoveToParent(usize),
    MoveToLeftmostChild(usize),
    MoveToRightSibling(usize),
    MoveToLeftSibling(usize),
    End,
}

impl Suboperation {
    fn registers(&self) -> Vec<usize> {
        use Suboperation::*;
        match *self {
            HasParent(i) | HasLeftSibling(i) | HasRightSibling(i) | HasChildren(i) | Unpair(i)
            | MoveToParent(i) | MoveToLeftmostChild(i) | MoveToRightSibling(i) | MoveToLeftSibling(i) => {
                vec![i]
            }
            Compare(i, j) | Pair(i, j) | Set(i, j) | Swap(i, j) => vec![i, j],
            End => vec![],
        }
    }

    /// Number of distinct suboperations once arguments are filled in, for
    /// `rho` registers: four predicates, four moves and unpair take one
    /// argument, compare/pair/set/swap take two, plus `End`.
    pub fn alphabet_size(rho: usize) -> usize {
        9 * rho + 4 * rho * rho + 1
    }
}

/// Value returned by a suboperation. Pair is augmented with whether the
/// winner's rank went up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SubopReturn {
    Unit,
    Bool(bool),
    Pair { incremented: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TraceEntry {
    pub subop: Suboperation,
    pub ret: SubopReturn,
}

pub type Trace = Vec<TraceEntry>;

/// A priority-queue operation. Handles are the node ids handed out by insert,
/// which are assigned consecutively from zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operation {
    Insert(i64),
    DecreaseKey(NodeId, Delta),
    ExtractMin,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VmError {
    #[error("precondition of {subop:?} violated: {reason}")]
    PreconditionViolated { subop: Suboperation, reason: &'static str },
    #[error("precondition of {subop:?} holds but was not certified: {missing}")]
    PreconditionNotVerified { subop: Suboperation, missing: &'static str },
    #[error("pointer p{index} out of range (rho = {rho})")]
    PointerOutOfRange { index: usize, rho: usize },
    #[error("extract-min on an empty forest")]
    EmptyForest,
    #[error("an extract-min session is in progress")]
    SessionInProgress,
    #[error("no extract-min session is open")]
    NoSession,
    #[error("the session has not executed End")]
    SessionNotEnded,
    #[error("the session already executed End")]
    SessionEnded,
    #[error("negative decrease-key delta {0}")]
    NegativeDelta(i64),
    #[error("handle {0} does not refer to a live node")]
    StaleHandle(NodeId),
    #[error("key arithmetic overflow")]
    KeyOverflow,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostAccount {
    pub inserts: u64,
    pub decrease_keys: u64,
    pub extract_mins: u64,
    pub extractmin_subops: u64,
    /// Cost of every operation in order.
    pub per_operation: Vec<u64>,
}

impl CostAccount {
    pub fn total(&self) -> u64 {
        self.inserts + self.decrease_keys + self.extractmin_subops
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Certificates {
    has_parent: Option<bool>,
    has_left: Option<bool>,
    has_right: Option<bool>,
    has_children: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct ExtractMinSession {
    pointers: Vec<NodeId>,
    certs: Vec<Certificates>,
    /// `(a, b)`: the key under `p_a` is certified smaller than under `p_b`.
    less: Vec<(usize, usize)>,
    subop_count: u64,
    pair_log: Vec<(NodeId, NodeId)>,
    trace: Trace,
    ended: bool,
}

impl ExtractMinSession {
    fn new(rho: usize, start: NodeId) -> Self {
        ExtractMinSession {
            pointers: vec![start; rho],
            certs: vec![Certificates::default(); rho],
            less: Vec::new(),
            subop_count: 0,
            pair_log: Vec::new(),
            trace: Vec::new(),
            ended: false,
        }
    }

    /// Node referenced by register `i` (1-based).
    pub fn pointer(&self, i: usize) -> NodeId {
        self.pointers[i - 1]
    }

    pub fn subop_count(&self) -> u64 {
        self.subop_count
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn pair_log(&self) -> &[(NodeId, NodeId)] {
        &self.pair_log
    }

    pub fn is_ended(&self) -> bool {
        self.ended
    }

    fn forget(&mut self, i: usize) {
        self.certs[i - 1] = Certificates::default();
        self.less.retain(|&(a, b)| a != i && b != i);
    }

    fn certify_less(&mut self, a: usize, b: usize) {
        self.less.retain(|&(x, y)| !(x == b && y == a));
        if !self.less.contains(&(a, b)) {
            self.less.push((a, b));
        }
    }
}

/// Result of a completed extract-min.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractMinOutcome {
    pub node: NodeId,
    pub key: Key,
    pub cost: u64,
    pub trace: Trace,
}

#[derive(Debug, Clone)]
pub struct PureHeap {
    forest: Forest,
    params: RankParams,
    rho: usize,
    session: Option<ExtractMinSession>,
    cost: CostAccount,
    audit: bool,
    audit_mismatches: u64,
}

impl Default for PureHeap {
    fn default() -> Self {
        PureHeap::new(RankParams::default(), DEFAULT_RHO)
    }
}

fn violated(subop: Suboperation, reason: &'static str) -> VmError {
    VmError::PreconditionViolated { subop, reason }
}

fn unverified(subop: Suboperation, missing: &'static str) -> VmError {
    VmError::PreconditionNotVerified { subop, missing }
}

impl PureHeap {
    pub fn new(params: RankParams, rho: usize) -> Self {
        assert!(rho >= 1, "at least one pointer register is required");
        PureHeap {
            forest: Forest::new(),
            params,
            rho,
            session: None,
            cost: CostAccount::default(),
            audit: false,
            audit_mismatches: 0,
        }
    }

    /// When on, every mutation is followed by a from-scratch rank evaluation
    /// and disagreements with the incremental caches are counted.
    pub fn set_audit(&mut self, on: bool) {
        self.audit = on;
    }

    pub fn audit_mismatches(&self) -> u64 {
        self.audit_mismatches
    }

    fn audit_point(&mut self) {
        if self.audit {
            self.audit_mismatches += rank::cache_mismatches(&self.forest, &self.params).len() as u64;
        }
    }

    pub fn forest(&self) -> &Forest {
        &self.forest
    }

    pub fn params(&self) -> &RankParams {
        &self.params
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn cost(&self) -> &CostAccount {
        &self.cost
    }

    pub fn session(&self) -> Option<&ExtractMinSession> {
        self.session.as_ref()
    }

    pub fn len(&self) -> usize {
        self.forest.node_count()
    }

    pub fn is_empty(&self) -> bool {
        self.forest.is_empty()
    }

    pub fn key(&self, h: NodeId) -> Option<Key> {
        self.forest.get(h).map(|n| n.key)
    }

    /// Live node with the smallest key.
    pub fn min_node(&self) -> Option<NodeId> {
        self.forest.roots().min_by_key(|&r| self.forest.node(r).key)
    }

    fn no_session(&self) -> Result<(), VmError> {
        match self.session {
            Some(_) => Err(VmError::SessionInProgress),
            None => Ok(()),
        }
    }

    /// Adds `value` as a new leftmost single-node heap. Unit cost.
    pub fn insert(&mut self, value: i64) -> Result<NodeId, VmError> {
        self.no_session()?;
        let serial = self.forest.capacity() as u64;
        let id = self.forest.push_new_root(Key::new(value, serial));
        rank::refresh_mark(&mut self.forest, id, &self.params);
        self.audit_point();
        self.cost.inserts += 1;
        self.cost.per_operation.push(1);
        Ok(id)
    }

    /// Cuts `h` from its parent, lowers its key by `delta` and makes it the
    /// leftmost root. Unit cost.
    pub fn decrease_key(&mut self, h: NodeId, delta: Delta) -> Result<(), VmError> {
        self.no_session()?;
        if let Delta::Finite(d) = delta {
            if d < 0 {
                return Err(VmError::NegativeDelta(d));
            }
        }
        let node = self.forest.get(h).ok_or(VmError::StaleHandle(h))?;
        let key = node.key.decreased(delta).ok_or(VmError::KeyOverflow)?;
        let parent = node.parent;
        self.forest.move_to_leftmost_root(h);
        if let Some(p) = parent {
            rank::refresh_upwards(&mut self.forest, p, &self.params);
        }
        self.forest.node_mut(h).key = key;
        rank::refresh_mark(&mut self.forest, h, &self.params);
        self.audit_point();
        self.cost.decrease_keys += 1;
        self.cost.per_operation.push(1);
        Ok(())
    }

    pub fn begin_extract_min(&mut self) -> Result<(), VmError> {
        self.no_session()?;
        let start = self.forest.leftmost_root().ok_or(VmError::EmptyForest)?;
        self.session = Some(ExtractMinSession::new(self.rho, start));
        Ok(())
    }

    fn check_register(&self, i: usize) -> Result<(), VmError> {
        if i == 0 || i > self.rho {
            Err(VmError::PointerOutOfRange { index: i, rho: self.rho })
        } else {
            Ok(())
        }
    }

    /// Validates and applies one suboperation. On error nothing changes.
    pub fn apply(&mut self, subop: Suboperation) -> Result<SubopReturn, VmError> {
        for i in subop.registers() {
            self.check_register(i)?;
        }
        let session = self.session.as_ref().ok_or(VmError::NoSession)?;
        if session.ended {
            return Err(VmError::SessionEnded);
        }
        let ret = self.execute(subop)?;
        let session = self.session.as_mut().expect("checked above");
        session.subop_count += 1;
        session.trace.push(TraceEntry { subop, ret });
        Ok(ret)
    }

    fn execute(&mut self, subop: Suboperation) -> Result<SubopReturn, VmError> {
        use Suboperation::*;
        let forest = &self.forest;
        let s = self.session.as_mut().expect("session checked by caller");
        let at = |i: usize| s.pointers[i - 1];
        match subop {
            HasParent(i) => {
                let r = forest.node(at(i)).parent.is_some();
                s.certs[i - 1].has_parent = Some(r);
                Ok(SubopReturn::Bool(r))
            }
            HasLeftSibling(i) => {
                let r = forest.node(at(i)).left.is_some();
                s.certs[i - 1].has_left = Some(r);
                Ok(SubopReturn::Bool(r))
            }
            HasRightSibling(i) => {
                let r = forest.node(at(i)).right.is_some();
                s.certs[i - 1].has_right = Some(r);
                Ok(SubopReturn::Bool(r))
            }
            HasChildren(i) => {
                let r = forest.node(at(i)).first_child.is_some();
                s.certs[i - 1].has_children = Some(r);
                Ok(SubopReturn::Bool(r))
            }
            Compare(i, j) => {
                let r = forest.node(at(i)).key <= forest.node(at(j)).key;
                if i != j && at(i) != at(j) {
                    if r {
                        s.certify_less(i, j);
                    } else {
                        s.certify_less(j, i);
                    }
                }
                Ok(SubopReturn::Bool(r))
            }
            Set(i, j) => {
                if i != j {
                    s.pointers[i - 1] = s.pointers[j - 1];
                    s.forget(i);
                }
                Ok(SubopReturn::Unit)
            }
            Swap(i, j) => {
                if i != j {
                    s.pointers.swap(i - 1, j - 1);
                    s.certs.swap(i - 1, j - 1);
                    for fact in s.less.iter_mut() {
                        let remap = |x: usize| if x == i { j } else if x == j { i } else { x };
                        *fact = (remap(fact.0), remap(fact.1));
                    }
                }
                Ok(SubopReturn::Unit)
            }
            MoveToParent(i) => {
                let n = forest.node(at(i));
                let target = n.parent.ok_or_else(|| violated(subop, "node has no parent"))?;
                if s.certs[i - 1].has_parent != Some(true) {
                    return Err(unverified(subop, "HasParent"));
                }
                s.pointers[i - 1] = target;
                s.forget(i);
                Ok(SubopReturn::Unit)
            }
            MoveToLeftmostChild(i) => {
                let n = forest.node(at(i));
                let target = n.first_child.ok_or_else(|| violated(subop, "node has no children"))?;
                if s.certs[i - 1].has_children != Some(true) {
                    return Err(unverified(subop, "HasChildren"));
                }
                s.pointers[i - 1] = target;
                s.forget(i);
                Ok(SubopReturn::Unit)
            }
            MoveToRightSibling(i) => {
                let n = forest.node(at(i));
                let target = n.right.ok_or_else(|| violated(subop, "node has no right sibling"))?;
                if s.certs[i - 1].has_right != Some(true) {
                    return Err(unverified(subop, "HasRightSibling"));
                }
                s.pointers[i - 1] = target;
                s.forget(i);
                Ok(SubopReturn::Unit)
            }
            MoveToLeftSibling(i) => {
                let n = forest.node(at(i));
                let target = n.left.ok_or_else(|| violated(subop, "node has no left sibling"))?;
                if s.certs[i - 1].has_left != Some(true) {
                    return Err(unverified(subop, "HasLeftSibling"));
                }
                s.pointers[i - 1] = target;
                s.forget(i);
                Ok(SubopReturn::Unit)
            }
            Pair(i, j) => {
                let (a, b) = (at(i), at(j));
                if a == b {
                    return Err(violated(subop, "both pointers reference the same node"));
                }
                if !forest.is_root(a) || !forest.is_root(b) {
                    return Err(violated(subop, "both nodes must be roots"));
                }
                if forest.node(a).key >= forest.node(b).key {
                    return Err(violated(subop, "key under p_i must be smaller"));
                }
                if s.certs[i - 1].has_parent != Some(false) || s.certs[j - 1].has_parent != Some(false) {
                    return Err(unverified(subop, "HasParent on both pointers"));
                }
                if !s.less.contains(&(i, j)) {
                    return Err(unverified(subop, "Compare(i, j)"));
                }
                let incremented = self.restructure(|forest, params| {
                    forest.detach(b);
                    forest.attach_leftmost_child(a, b);
                    forest.node_mut(b).paired_in_current_extractmin = true;
                    rank::on_pair(forest, a, b, params)
                });
                self.session.as_mut().expect("open").pair_log.push((a, b));
                Ok(SubopReturn::Pair { incremented })
            }
            Unpair(i) => {
                let a = at(i);
                let child = forest
                    .node(a)
                    .first_child
                    .ok_or_else(|| violated(subop, "node has no children"))?;
                if !s.pair_log.contains(&(a, child)) {
                    return Err(violated(subop, "left child was not paired in this extract-min"));
                }
                if s.certs[i - 1].has_children != Some(true) {
                    return Err(unverified(subop, "HasChildren"));
                }
                self.restructure(|forest, params| {
                    forest.detach(child);
                    forest.insert_left_of(a, child);
                    forest.node_mut(child).paired_in_current_extractmin = false;
                    rank::refresh_upwards(forest, a, params);
                    if let Some(p) = forest.node(a).parent {
                        rank::refresh_upwards(forest, p, params);
                    }
                });
                let s = self.session.as_mut().expect("open");
                s.pair_log.retain(|&e| e != (a, child));
                Ok(SubopReturn::Unit)
            }
            End => {
                if forest.root_count() != 1 {
                    return Err(violated(subop, "forest has more than one heap"));
                }
                let certified = (1..=self.rho).any(|k| {
                    let c = s.certs[k - 1];
                    forest.is_root(at(k))
                        && c.has_parent == Some(false)
                        && c.has_left == Some(false)
                        && c.has_right == Some(false)
                });
                if !certified {
                    return Err(unverified(subop, "HasParent/HasLeftSibling/HasRightSibling on the root"));
                }
                s.ended = true;
                let paired: Vec<NodeId> = s.pair_log.iter().map(|&(_, b)| b).collect();
                for b in paired {
                    self.forest.node_mut(b).paired_in_current_extractmin = false;
                }
                Ok(SubopReturn::Unit)
            }
        }
    }

    /// Runs a structural change and drops certificates of every pointer whose
    /// node's links changed.
    fn restructure<R>(&mut self, f: impl FnOnce(&mut Forest, &RankParams) -> R) -> R {
        let s = self.session.as_ref().expect("open");
        let before: Vec<Links> = s.pointers.iter().map(|&p| self.forest.links(p)).collect();
        let out = f(&mut self.forest, &self.params);
        self.audit_point();
        let s = self.session.as_mut().expect("open");
        for (k, links) in before.iter().enumerate() {
            if self.forest.links(s.pointers[k]) != *links {
                s.forget(k + 1);
            }
        }
        out
    }

    /// Removes the unique root after `End` and closes the session.
    pub fn finish_extract_min(&mut self) -> Result<ExtractMinOutcome, VmError> {
        let s = self.session.as_ref().ok_or(VmError::NoSession)?;
        if !s.ended {
            return Err(VmError::SessionNotEnded);
        }
        let s = self.session.take().expect("checked");
        let root = self.forest.leftmost_root().expect("End certified a single root");
        let key = self.forest.node(root).key;
        self.forest.remove_root(root);
        self.audit_point();
        self.cost.extract_mins += 1;
        self.cost.extractmin_subops += s.subop_count;
        self.cost.per_operation.push(s.subop_count);
        Ok(ExtractMinOutcome {
            node: root,
            key,
            cost: s.subop_count,
            trace: s.trace,
        })
    }

    /// Structure code (shape plus marks) of the forest.
    pub fn snapshot_structure(&self) -> Result<String, VmError> {
        self.no_session()?;
        Ok(self.forest.structure_code())
    }

    /// Everything observable about the machine state, for equality checks.
    pub fn fingerprint(&self) -> String {
        let mut out = self.forest.structure_code();
        for r in self.forest.postorder() {
            let n = self.forest.node(r);
            out.push_str(&format!("|{}:{}:{}", r, n.key.value, n.rank.rank));
        }
        if let Some(s) = &self.session {
            out.push_str(&format!(
                "|ptr{:?}|cert{:?}|less{:?}|n{}|end{}",
                s.pointers, s.certs, s.less, s.subop_count, s.ended
            ));
        }
        out
    }

    /// The designated minimum root, if a node currently holds `-inf`.
    pub fn designated_minimum(&self) -> Option<NodeId> {
        self.forest
            .roots()
            .find(|&r| self.forest.node(r).key.value == KeyValue::NegInf)
    }
}
