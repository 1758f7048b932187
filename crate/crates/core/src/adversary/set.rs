//! AI-TSD sets and the evolutions that transform them.
//!
//! In exact mode every sequence is materialized with its own heap; in ledger
//! mode a single representative is carried and distinctness is tracked by
//! the analytic charges alone. Both modes push one [`TrailEntry`] per
//! evolution.

use std::collections::{BTreeMap, HashSet};

use itertools::Itertools;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::{AdversaryConfig, AdversaryError, Mode};
use crate::algorithms::{extract_min, AlgorithmKind};
use crate::forest::{NodeId, Position};
use crate::key::{Delta, KeyValue};
use crate::rank::{self, RankParams};
use crate::vm::{Operation, PureHeap, Suboperation, Trace, TraceEntry};

/// One operation sequence together with the heap it produces.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub ops: Vec<Operation>,
    pub heap: PureHeap,
    pub trace: Trace,
}

impl Sequence {
    fn new(params: RankParams, rho: usize, audit: bool) -> Self {
        let mut heap = PureHeap::new(params, rho);
        heap.set_audit(audit);
        Sequence {
            ops: Vec::new(),
            heap,
            trace: Vec::new(),
        }
    }

    pub fn cost(&self) -> u64 {
        self.heap.cost().total()
    }

    pub fn structure(&self) -> String {
        self.heap.forest().structure_code()
    }

    fn insert(&mut self, v: i64) {
        self.heap.insert(v).expect("no session is open between evolutions");
        self.ops.push(Operation::Insert(v));
    }

    fn decrease_key(&mut self, h: NodeId, d: Delta) {
        self.heap.decrease_key(h, d).expect("targets are validated before use");
        self.ops.push(Operation::DecreaseKey(h, d));
    }

    fn all_unmarked(&self) -> bool {
        let f = self.heap.forest();
        f.live_ids().all(|x| !f.node(x).rank.marked)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvolutionKind {
    Insert,
    DecreaseKey,
    DesignatedMinRoot,
    ExtractMin,
    BigSmall,
    Permute,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrailEntry {
    pub step: usize,
    pub round: usize,
    pub evolution: EvolutionKind,
    pub sequences_before: u128,
    pub sequences_after: u128,
    /// `log2(after / before)`, exact mode only.
    pub observed_delta: Option<f64>,
    /// Change charged by the per-evolution formula.
    pub analytic_delta: f64,
    /// Running product of the observed keep/branch ratios, exact mode only.
    pub count_trail: Option<String>,
    pub count_trail_matches: Option<bool>,
    pub distinctness: f64,
    pub ledger_distinctness: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ChildCount {
    Exact(usize),
    Many,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Classification {
    ManyRoots,
    Counted {
        roots: usize,
        largest: Position,
        children: ChildCount,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BigSmall {
    Big,
    Small,
}

impl Classification {
    pub fn big_small(&self) -> (Option<Position>, BigSmall) {
        match self {
            Classification::ManyRoots => (None, BigSmall::Big),
            Classification::Counted {
                largest,
                children: ChildCount::Many,
                ..
            } => (Some(largest.clone()), BigSmall::Big),
            Classification::Counted {
                largest,
                children: ChildCount::Exact(_),
                ..
            } => (Some(largest.clone()), BigSmall::Small),
        }
    }
}

/// Limits used by the big/small classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// More roots than this is the many-roots case.
    pub roots: f64,
    /// Fewer children than this is the small case.
    pub children: f64,
}

impl Thresholds {
    /// `f log n` and `f log(n / (f log n))`, unless overridden.
    pub fn new(n: usize, params: &RankParams, roots: Option<f64>, children: Option<f64>) -> Self {
        let f = params.f();
        let log_n = (n.max(1) as f64).log2();
        let roots_default = f * log_n;
        let s = n as f64 / roots_default;
        Thresholds {
            roots: roots.unwrap_or(roots_default),
            children: children.unwrap_or(if s > 0.0 && s.is_finite() { f * s.log2() } else { 0.0 }),
        }
    }

    /// Number of classifications a size-`n` forest can receive.
    pub fn classification_count(&self, n: usize) -> u128 {
        let r_max = if self.roots < 1.0 { 0 } else { (self.roots.floor() as u128).min(n as u128) };
        let exact_children = if self.children <= 0.0 {
            0
        } else {
            (self.children.ceil() as u128).min(n as u128)
        };
        1 + (exact_children + 1) * r_max * (r_max + 1) / 2
    }

    pub fn classify(&self, heap: &PureHeap) -> Classification {
        let f = heap.forest();
        let roots = f.root_count();
        if roots as f64 > self.roots {
            return Classification::ManyRoots;
        }
        let p = f
            .roots()
            .fold(None::<(NodeId, usize)>, |best, r| {
                let size = f.subtree_size(r);
                match best {
                    Some((_, s)) if s >= size => best,
                    _ => Some((r, size)),
                }
            })
            .expect("classified forests are nonempty")
            .0;
        let c = f.child_count(p);
        Classification::Counted {
            roots,
            largest: f.position_of(p),
            children: if (c as f64) < self.children {
                ChildCount::Exact(c)
            } else {
                ChildCount::Many
            },
        }
    }
}

/// Where a designated-minimum-root evolution lands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RootTarget {
    At(Position),
    Leftmost,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractMinResult {
    pub acem: u64,
    pub violations: Vec<Position>,
    pub pairings: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermuteResult {
    pub q: usize,
    pub location: Vec<u32>,
    pub children: usize,
    pub duplicates: usize,
}

fn log2_factorial(q: usize) -> f64 {
    (2..=q).map(|i| (i as f64).log2()).sum()
}

fn log2_binomial(c: usize, j: usize) -> f64 {
    if j > c {
        return f64::NEG_INFINITY;
    }
    (1..=j).map(|i| ((c - j + i) as f64 / i as f64).log2()).sum()
}

/// `log2 sum_{j <= q} C(c, j)`.
pub(crate) fn log2_locations(c: usize, q: usize) -> f64 {
    let terms: Vec<f64> = (0..=q.min(c)).map(|j| log2_binomial(c, j)).collect();
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    top + terms.iter().map(|t| (t - top).exp2()).sum::<f64>().log2()
}

/// Most common key, ties going to the smallest.
fn majority<K: Ord + Clone>(keys: &[K]) -> K {
    let mut counts: BTreeMap<&K, usize> = BTreeMap::new();
    for k in keys {
        *counts.entry(k).or_default() += 1;
    }
    let best = counts.values().copied().max().expect("nonempty");
    (*counts.iter().find(|(_, &c)| c == best).expect("nonempty").0).clone()
}

#[derive(Debug, Clone)]
pub struct AitsdSet {
    pub mode: Mode,
    pub seqs: Vec<Sequence>,
    pub trail: Vec<TrailEntry>,
    pub thresholds: Thresholds,
    pub round: usize,
    /// Snapshot codes stayed pairwise distinct after every evolution.
    pub tsd_preserved: bool,
    algorithm: AlgorithmKind,
    params: RankParams,
    rho: usize,
    n: usize,
    q: Option<usize>,
    m: f64,
    cap: usize,
    dmr_pending: bool,
    ledger_d: f64,
    count_trail: Ratio<u128>,
}

impl AitsdSet {
    /// The initial set: one sequence of `n` inserts of 0.
    pub fn initial(cfg: &AdversaryConfig) -> Self {
        let mut seq = Sequence::new(cfg.params, cfg.rho, cfg.audit);
        for _ in 0..cfg.n {
            seq.insert(0);
        }
        AitsdSet {
            mode: cfg.mode,
            seqs: vec![seq],
            trail: Vec::new(),
            thresholds: Thresholds::new(cfg.n, &cfg.params, cfg.many_roots_limit, cfg.small_children_limit),
            round: 0,
            tsd_preserved: true,
            algorithm: cfg.algorithm,
            params: cfg.params,
            rho: cfg.rho,
            n: cfg.n,
            q: cfg.q,
            m: cfg.m,
            cap: cfg.exact_cap,
            dmr_pending: false,
            ledger_d: 0.0,
            count_trail: Ratio::from_integer(1),
        }
    }

    pub fn len(&self) -> usize {
        self.seqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seqs.is_empty()
    }

    pub fn representative(&self) -> &Sequence {
        &self.seqs[0]
    }

    /// `log2 |set|` in exact mode, the analytic running total in ledger mode.
    pub fn distinctness(&self) -> f64 {
        match self.mode {
            Mode::Exact => (self.seqs.len() as f64).log2(),
            Mode::Ledger => self.ledger_d,
        }
    }

    pub fn ledger_distinctness(&self) -> f64 {
        self.ledger_d
    }

    pub fn dmr_pending(&self) -> bool {
        self.dmr_pending
    }

    fn ensure_not_pending(&self, what: &'static str) -> Result<(), AdversaryError> {
        if self.dmr_pending {
            Err(AdversaryError::OrderViolation(what))
        } else {
            Ok(())
        }
    }

    fn record(&mut self, evolution: EvolutionKind, before: usize, analytic_delta: f64) {
        let after = self.seqs.len();
        self.ledger_d += analytic_delta;
        let (observed, trail, matches) = match self.mode {
            Mode::Exact => {
                self.count_trail *= Ratio::new(after as u128, before as u128);
                (
                    Some((after as f64 / before as f64).log2()),
                    Some(self.count_trail.to_string()),
                    Some(self.count_trail == Ratio::from_integer(after as u128)),
                )
            }
            Mode::Ledger => (None, None, None),
        };
        if self.mode == Mode::Exact {
            let codes: HashSet<String> = self.seqs.iter().map(Sequence::structure).collect();
            if codes.len() != self.seqs.len() {
                self.tsd_preserved = false;
            }
        }
        self.trail.push(TrailEntry {
            step: self.trail.len(),
            round: self.round,
            evolution,
            sequences_before: before as u128,
            sequences_after: after as u128,
            observed_delta: observed,
            analytic_delta,
            count_trail: trail,
            count_trail_matches: matches,
            distinctness: self.distinctness(),
            ledger_distinctness: self.ledger_d,
        });
    }

    /// Appends `Insert(0)` everywhere.
    pub fn evolve_insert(&mut self) -> Result<(), AdversaryError> {
        self.ensure_not_pending("insert")?;
        let before = self.len();
        for s in &mut self.seqs {
            s.insert(0);
        }
        self.record(EvolutionKind::Insert, before, 0.0);
        Ok(())
    }

    /// Decrease-key at `pos` so that its key becomes the negated rank.
    pub fn evolve_decrease_key(&mut self, pos: &Position) -> Result<(), AdversaryError> {
        self.ensure_not_pending("decrease-key")?;
        let mut plan = Vec::with_capacity(self.len());
        for s in &self.seqs {
            let f = s.heap.forest();
            let invalid = |why: &str| AdversaryError::InvalidTarget(format!("decrease-key at {pos}: {why}"));
            let x = f.resolve(pos).ok_or_else(|| invalid("no such node"))?;
            let node = f.node(x);
            if !(f.is_root(x) || node.rank.marked) {
                return Err(invalid("unmarked internal node"));
            }
            let KeyValue::Finite(v) = node.key.value else {
                return Err(invalid("key is -inf"));
            };
            let delta = v + node.rank.rank as i64;
            if delta < 0 {
                return Err(invalid("rank fell below the negated key"));
            }
            plan.push((x, Delta::Finite(delta)));
        }
        let before = self.len();
        for (s, (x, d)) in self.seqs.iter_mut().zip(plan) {
            s.decrease_key(x, d);
        }
        self.record(EvolutionKind::DecreaseKey, before, 0.0);
        Ok(())
    }

    /// Decrease-key to `-inf` on a root present in every terminal structure.
    pub fn evolve_designated_min_root(&mut self, target: &RootTarget) -> Result<(), AdversaryError> {
        self.ensure_not_pending("designated-minimum-root")?;
        let mut plan = Vec::with_capacity(self.len());
        for s in &self.seqs {
            let f = s.heap.forest();
            let x = match target {
                RootTarget::At(pos) => f.resolve(pos).filter(|&x| f.is_root(x)),
                RootTarget::Leftmost => f.leftmost_root(),
            };
            plan.push(x.ok_or_else(|| AdversaryError::InvalidTarget(format!("designated minimum root {target:?} is not a root")))?);
        }
        let before = self.len();
        for (s, x) in self.seqs.iter_mut().zip(plan) {
            s.decrease_key(x, Delta::Infinite);
        }
        self.dmr_pending = true;
        self.record(EvolutionKind::DesignatedMinRoot, before, 0.0);
        Ok(())
    }

    /// Appends an extract-min, keeps the sequences following the most common
    /// suboperation/return path and reports the newly marked positions.
    pub fn evolve_extract_min(&mut self) -> Result<ExtractMinResult, AdversaryError> {
        let before = self.len();
        let mut runs: Vec<(Sequence, Trace, Vec<bool>)> = Vec::with_capacity(before);
        for s in self.seqs.drain(..) {
            let mut s = s;
            if s.heap.is_empty() {
                return Err(AdversaryError::EmptyForest);
            }
            let f = s.heap.forest();
            let mut unmarked_before = vec![false; f.capacity()];
            for x in f.live_ids() {
                unmarked_before[x.index()] = !f.node(x).rank.marked;
            }
            let mut program = self.algorithm.program();
            let out = extract_min(&mut s.heap, program.as_mut())?;
            runs.push((s, out.trace, unmarked_before));
        }
        let mut alive: Vec<usize> = (0..runs.len()).collect();
        let mut step = 0;
        loop {
            let keys: Vec<TraceEntry> = alive.iter().map(|&i| runs[i].1[step]).collect();
            let chosen = majority(&keys);
            alive.retain(|&i| runs[i].1[step] == chosen);
            step += 1;
            if chosen.subop == Suboperation::End {
                break;
            }
        }
        let acem = step as u64;
        let mut vio: Option<Vec<Position>> = None;
        let keep: HashSet<usize> = alive.into_iter().collect();
        let mut pairings = 0;
        for (i, (mut s, trace, unmarked_before)) in runs.into_iter().enumerate() {
            if !keep.contains(&i) {
                continue;
            }
            let f = s.heap.forest();
            let newly: Vec<Position> = f
                .postorder()
                .into_iter()
                .filter(|&x| f.node(x).rank.marked && unmarked_before.get(x.index()).copied().unwrap_or(false))
                .map(|x| f.position_of(x))
                .collect();
            match &vio {
                None => vio = Some(newly),
                Some(v) if *v != newly => {
                    return Err(AdversaryError::SubdistinctViolated {
                        expected: v.clone(),
                        found: newly,
                    })
                }
                Some(_) => {}
            }
            pairings = trace.iter().filter(|e| matches!(e.subop, Suboperation::Pair(..))).count() as u64;
            s.trace.extend(trace);
            s.ops.push(Operation::ExtractMin);
            self.seqs.push(s);
        }
        self.dmr_pending = false;
        let sigma = Suboperation::alphabet_size(self.rho) as f64;
        self.record(EvolutionKind::ExtractMin, before, -(acem as f64) * (2.0 * sigma).log2());
        Ok(ExtractMinResult {
            acem,
            violations: vio.unwrap_or_default(),
            pairings,
        })
    }

    /// Classifies every terminal structure and keeps the most common class.
    pub fn evolve_big_small(&mut self) -> Result<Classification, AdversaryError> {
        self.ensure_not_pending("big/small")?;
        let before = self.len();
        let classes: Vec<Classification> = self.seqs.iter().map(|s| self.thresholds.classify(&s.heap)).collect();
        let chosen = majority(&classes);
        let mut it = classes.iter();
        self.seqs.retain(|_| *it.next().expect("same length") == chosen);
        let count = self.thresholds.classification_count(self.n);
        self.record(EvolutionKind::BigSmall, before, -(count as f64).log2());
        Ok(chosen)
    }

    fn q_target(&self) -> usize {
        match (self.q, self.mode) {
            (Some(q), _) => q,
            (None, Mode::Exact) => 5,
            (None, Mode::Ledger) => {
                let log_d = (self.params.d.max(2) as f64).log2();
                (self.m * (self.n.max(2) as f64).log2() / log_d).ceil() as usize
            }
        }
    }

    /// Branches every sequence over all orders of decrease-keys on a
    /// commonly located permutable set of children of the leftmost root.
    pub fn evolve_permute(&mut self) -> Result<PermuteResult, AdversaryError> {
        let before = self.len();
        let q_target = self.q_target();
        let mut located = Vec::with_capacity(before);
        for s in &self.seqs {
            if !s.all_unmarked() {
                return Err(AdversaryError::PreconditionUnmet("permute needs an entirely unmarked forest".into()));
            }
            let f = s.heap.forest();
            let p = f.leftmost_root().ok_or(AdversaryError::EmptyForest)?;
            if (f.subtree_size(p) as f64) * self.thresholds.roots < self.n as f64 {
                return Err(AdversaryError::PreconditionUnmet("leftmost root subtree is too small".into()));
            }
            let mut seen = HashSet::new();
            let mut set: Vec<(u32, NodeId)> = Vec::new();
            for c in rank::child_profile(f, p, &self.params) {
                if c.efficient && seen.insert(c.rank) {
                    set.push((f.right_index(c.node), c.node));
                }
            }
            set.truncate(q_target);
            located.push((set.iter().map(|e| e.0).collect::<Vec<u32>>(), set, f.child_count(p)));
        }
        let keys: Vec<Vec<u32>> = located.iter().map(|l| l.0.clone()).collect();
        let location = majority(&keys);
        let q = location.len();
        let mut children = 0;
        let mut out = Vec::new();
        for (s, (loc, set, c)) in self.seqs.drain(..).zip(located) {
            if loc != location {
                continue;
            }
            children = c;
            let nodes: Vec<NodeId> = set.iter().map(|e| e.1).collect();
            for order in (0..q).permutations(q) {
                let mut branch = s.clone();
                for &i in &order {
                    branch.decrease_key(nodes[i], Delta::Finite(0));
                }
                out.push(branch);
            }
        }
        let mut seen = HashSet::new();
        let total = out.len();
        out.retain(|s| seen.insert(s.structure()));
        let duplicates = total - out.len();
        if self.mode == Mode::Exact && out.len() > self.cap {
            return Err(AdversaryError::ExplosionGuard {
                size: out.len(),
                cap: self.cap,
            });
        }
        self.seqs = out;
        let analytic = log2_factorial(q) - log2_locations(children, q_target);
        self.record(EvolutionKind::Permute, before, analytic);
        Ok(PermuteResult {
            q,
            location,
            children,
            duplicates,
        })
    }

    /// Every node in every terminal structure is unmarked.
    pub fn all_unmarked(&self) -> bool {
        self.seqs.iter().all(Sequence::all_unmarked)
    }

    /// All sequences share one trace.
    pub fn traces_agree(&self) -> bool {
        self.seqs.windows(2).all(|w| w[0].trace == w[1].trace)
    }

    pub fn sizes_are(&self, n: usize) -> bool {
        self.seqs.iter().all(|s| s.heap.len() == n)
    }
}
