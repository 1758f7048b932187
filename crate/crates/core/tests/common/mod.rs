//! Test-side oracles and generators shared by the integration tests.
//!
//! Nothing here calls the library's rank fold; ranks are evaluated straight
//! from the definition, with the `noninc` set rebuilt by scanning back to the
//! previous incremental child.

#![allow(dead_code)]

use std::collections::BTreeMap;

use pureheap::forest::Forest;
use pureheap::{KeyValue, NodeId, PureHeap, RankParams, Suboperation};
use rand::seq::SliceRandom;
use rand::Rng;

/// `(rank, efficient flags, incremental flags)` of a node whose unmarked
/// children (right to left) have the given ranks.
pub fn rank_from_children(child_ranks: &[u32], p: &RankParams) -> (u32, Vec<bool>, Vec<bool>) {
    let mut r = 0u32;
    let mut eff = Vec::new();
    let mut inc: Vec<bool> = Vec::new();
    for (i, &c) in child_ranks.iter().enumerate() {
        let efficient = r >= c && c + p.window >= r;
        eff.push(efficient);
        // noninc(y_i): y_i plus the siblings to its right up to (excluding)
        // the nearest incremental one
        let start = (0..i).rev().find(|&j| inc[j]).map_or(0, |j| j + 1);
        let noninc = start..=i;
        let efficient_in_noninc = noninc.clone().filter(|&j| eff[j]).count() as u32;
        let efficient_case = efficient && efficient_in_noninc == p.w;
        let default_case = noninc.count() as u32 == p.threshold;
        let incremental = efficient_case || default_case;
        inc.push(incremental);
        if incremental {
            r += 1;
        }
    }
    (r, eff, inc)
}

/// `(rank, marked)` of `x` from the definition, recursing through the forest.
pub fn oracle_rank(forest: &Forest, x: NodeId, p: &RankParams) -> (u32, bool) {
    let mut ranks = Vec::new();
    let mut kids: Vec<NodeId> = forest.children(x).collect();
    kids.reverse();
    for c in kids {
        let (r, marked) = oracle_rank(forest, c, p);
        if !marked {
            ranks.push(r);
        }
    }
    let (rank, _, _) = rank_from_children(&ranks, p);
    let marked = match forest.node(x).key.value {
        KeyValue::NegInf => false,
        KeyValue::Finite(v) => v != -(rank as i64),
    };
    (rank, marked)
}

/// Oracle `(rank, marked)` of every live node, indexed by node id.
pub fn oracle_all(forest: &Forest, p: &RankParams) -> Vec<Option<(u32, bool)>> {
    let mut out: Vec<Option<(u32, bool)>> = vec![None; forest.capacity()];
    for x in forest.postorder() {
        let mut ranks = Vec::new();
        let mut kids: Vec<NodeId> = forest.children(x).collect();
        kids.reverse();
        for c in kids {
            let (r, marked) = out[c.index()].expect("postorder visits children first");
            if !marked {
                ranks.push(r);
            }
        }
        let (rank, _, _) = rank_from_children(&ranks, p);
        let marked = match forest.node(x).key.value {
            KeyValue::NegInf => false,
            KeyValue::Finite(v) => v != -(rank as i64),
        };
        out[x.index()] = Some((rank, marked));
    }
    out
}

/// Every live node whose cached rank or mark differs from the oracle.
pub fn oracle_mismatches(heap: &PureHeap) -> Vec<NodeId> {
    let f = heap.forest();
    f.live_ids()
        .filter(|&x| {
            let c = f.node(x).rank;
            oracle_rank(f, x, heap.params()) != (c.rank, c.marked)
        })
        .collect()
}

/// Ordered rooted tree as a list of children, leftmost first.
#[derive(Debug, Clone)]
pub struct Tree(pub Vec<Tree>);

impl Tree {
    pub fn size(&self) -> usize {
        1 + self.0.iter().map(Tree::size).sum::<usize>()
    }
}

/// All ordered forests on exactly `n` nodes.
pub fn forests(n: usize, memo: &mut BTreeMap<usize, Vec<Vec<Tree>>>) -> Vec<Vec<Tree>> {
    if let Some(v) = memo.get(&n) {
        return v.clone();
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
    } else {
        // first tree takes `1 + inner` nodes
        for inner in 0..n {
            for kids in forests(inner, memo) {
                for rest in forests(n - 1 - inner, memo) {
                    let mut f = vec![Tree(kids.clone())];
                    f.extend(rest);
                    out.push(f);
                }
            }
        }
    }
    memo.insert(n, out.clone());
    out
}

/// Rank of a fully unmarked tree, or `None` when some child outranks the
/// running rank of its parent at the moment it is folded in (a link pairing
/// never produces).
pub fn unmarked_tree_rank(t: &Tree, p: &RankParams) -> Option<u32> {
    let mut ranks = Vec::new();
    for c in t.0.iter().rev() {
        ranks.push(unmarked_tree_rank(c, p)?);
    }
    let (r, _, inc) = rank_from_children(&ranks, p);
    let mut running = 0;
    for (i, &c) in ranks.iter().enumerate() {
        if c > running {
            return None;
        }
        if inc[i] {
            running += 1;
        }
    }
    Some(r)
}

/// Largest unmarked tree of each rank `0..=k_max` found among all ordered
/// trees with at most `max_nodes` nodes.
pub fn exhaustive_max_sizes(max_nodes: usize, k_max: u32, p: &RankParams) -> Vec<Option<usize>> {
    let mut memo = BTreeMap::new();
    let mut best = vec![None; k_max as usize + 1];
    for n in 1..=max_nodes {
        for kids in forests(n - 1, &mut memo) {
            let t = Tree(kids);
            if let Some(r) = unmarked_tree_rank(&t, p) {
                if r <= k_max {
                    let slot: &mut Option<usize> = &mut best[r as usize];
                    *slot = Some(slot.map_or(n, |s| s.max(n)));
                }
            }
        }
    }
    best
}

/// A heap with between 1 and `max_nodes` items shaped by random inserts,
/// decrease-keys and two-pass extract-mins.
pub fn random_heap(rng: &mut impl Rng, max_nodes: usize, params: RankParams) -> PureHeap {
    let mut heap = PureHeap::new(params, pureheap::DEFAULT_RHO);
    let target = rng.gen_range(1..=max_nodes);
    let mut program = pureheap::AlgorithmKind::TwoPass.program();
    while heap.len() < target {
        heap.insert(rng.gen_range(-50..50)).unwrap();
        if heap.len() > 2 && rng.gen_ratio(1, 8) {
            pureheap::extract_min(&mut heap, program.as_mut()).unwrap();
        }
        if heap.len() > 1 && rng.gen_ratio(1, 6) {
            let ids: Vec<NodeId> = heap.forest().live_ids().collect();
            let h = *ids.choose(rng).unwrap();
            heap.decrease_key(h, pureheap::Delta::Finite(rng.gen_range(0..5))).unwrap();
        }
    }
    heap
}

fn step(heap: &mut PureHeap, s: Suboperation, log: &mut Vec<Suboperation>) -> Result<pureheap::SubopReturn, String> {
    log.push(s);
    heap.apply(s)
        .map_err(|e| format!("valid program raised {e} at step {}: {log:?}", log.len()))
}

/// Runs a random program of roughly `len` suboperations against an open
/// session. Every structural step is preceded by the queries that certify
/// it, so a correct VM never rejects one. Ends the session when the forest
/// reaches a single root and returns the suboperations issued.
pub fn random_valid_program(heap: &mut PureHeap, rng: &mut impl Rng, len: usize) -> Result<Vec<Suboperation>, String> {
    use Suboperation::*;
    let rho = heap.rho();
    let mut log = Vec::new();
    while log.len() < len {
        let s = heap.session().expect("session open");
        if s.is_ended() {
            break;
        }
        let i = rng.gen_range(1..=rho);
        let j = rng.gen_range(1..=rho);
        let (a, b) = (s.pointer(i), s.pointer(j));
        let f = heap.forest();
        match rng.gen_range(0..12) {
            0 => {
                step(heap, HasParent(i), &mut log)?;
            }
            1 => {
                step(heap, HasChildren(i), &mut log)?;
            }
            2 => {
                step(heap, Compare(i, j), &mut log)?;
            }
            3 => {
                step(heap, Set(i, j), &mut log)?;
            }
            4 => {
                step(heap, Swap(i, j), &mut log)?;
            }
            5 => {
                if step(heap, HasParent(i), &mut log)? == pureheap::SubopReturn::Bool(true) {
                    step(heap, MoveToParent(i), &mut log)?;
                }
            }
            6 => {
                if step(heap, HasChildren(i), &mut log)? == pureheap::SubopReturn::Bool(true) {
                    step(heap, MoveToLeftmostChild(i), &mut log)?;
                }
            }
            7 => {
                if step(heap, HasRightSibling(i), &mut log)? == pureheap::SubopReturn::Bool(true) {
                    step(heap, MoveToRightSibling(i), &mut log)?;
                }
            }
            8 => {
                if step(heap, HasLeftSibling(i), &mut log)? == pureheap::SubopReturn::Bool(true) {
                    step(heap, MoveToLeftSibling(i), &mut log)?;
                }
            }
            9 | 10 => {
                if a != b && f.is_root(a) && f.is_root(b) {
                    step(heap, HasParent(i), &mut log)?;
                    step(heap, HasParent(j), &mut log)?;
                    if step(heap, Compare(i, j), &mut log)? == pureheap::SubopReturn::Bool(true) {
                        step(heap, Pair(i, j), &mut log)?;
                    } else {
                        step(heap, Pair(j, i), &mut log)?;
                    }
                }
            }
            _ => {
                let paired = f
                    .node(a)
                    .first_child
                    .is_some_and(|c| s.pair_log().contains(&(a, c)));
                if paired {
                    step(heap, HasChildren(i), &mut log)?;
                    step(heap, Unpair(i), &mut log)?;
                }
            }
        }
        let f = heap.forest();
        let s = heap.session().unwrap();
        if f.root_count() == 1 && f.is_root(s.pointer(i)) && rng.gen_ratio(1, 4) {
            step(heap, HasParent(i), &mut log)?;
            step(heap, HasLeftSibling(i), &mut log)?;
            step(heap, HasRightSibling(i), &mut log)?;
            step(heap, End, &mut log)?;
        }
    }
    Ok(log)
}
