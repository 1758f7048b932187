//! Rank and mark analysis over the unmarked structure of a forest.
//!
//! A node's rank is folded over its unmarked children in attachment order
//! (rightmost first). The fold keeps a running rank `r` together with the
//! current run of non-incremental children. A child of rank `c` is
//! *efficiently linked* when `r - W <= c <= r`. The running rank goes up by one
//! when the child is the `w`-th efficiently linked member of the run, or when
//! the run reaches `T` children; the run then restarts.
//!
//! A live node is *marked* when its key is not the negation of its rank. The
//! `-inf` sentinel is never marked. Marks feed back into parents (marked
//! children are skipped), which is well founded because a node's rank depends
//! only on its own subtree.

pub mod monotone;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forest::{Forest, NodeId, RankCache};
use crate::key::{Key, KeyValue};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParamError {
    #[error("d must be positive")]
    ZeroD,
    #[error("efficiency window W must be positive")]
    ZeroWindow,
    #[error("default-case threshold T must be positive")]
    ZeroThreshold,
    #[error("exponent a = {0} is too large")]
    ExponentTooLarge(u32),
}

/// Which quantity the default-case threshold scales: `T = 2^a * w` or `2^a * d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdBase {
    #[default]
    W,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankParams {
    /// Hypothesised amortized decrease-key cost.
    pub d: u32,
    /// `2d + 1`.
    pub w: u32,
    /// Efficiency window `W`.
    pub window: u32,
    /// Default-case threshold `T`.
    pub threshold: u32,
}

impl Default for RankParams {
    fn default() -> Self {
        RankParams::from_exponent(1, 1, 10, ThresholdBase::W).expect("default params are valid")
    }
}

impl RankParams {
    pub fn explicit(d: u32, window: u32, threshold: u32) -> Result<Self, ParamError> {
        if d == 0 {
            return Err(ParamError::ZeroD);
        }
        if window == 0 {
            return Err(ParamError::ZeroWindow);
        }
        if threshold == 0 {
            return Err(ParamError::ZeroThreshold);
        }
        Ok(RankParams {
            d,
            w: 2 * d + 1,
            window,
            threshold,
        })
    }

    pub fn from_exponent(d: u32, window: u32, a: u32, base: ThresholdBase) -> Result<Self, ParamError> {
        if d == 0 {
            return Err(ParamError::ZeroD);
        }
        let scale = 1u32.checked_shl(a).ok_or(ParamError::ExponentTooLarge(a))?;
        let b = match base {
            ThresholdBase::W => 2 * d + 1,
            ThresholdBase::D => d,
        };
        let threshold = scale.checked_mul(b).ok_or(ParamError::ExponentTooLarge(a))?;
        Self::explicit(d, window, threshold)
    }

    /// Non-fatal problems with the parameter combination.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.threshold < self.w {
            out.push(format!(
                "T = {} is below w = {}; the default case fires before any efficient increment",
                self.threshold, self.w
            ));
        }
        out
    }

    /// `f = T / (2 log2 w)`.
    pub fn f(&self) -> f64 {
        self.threshold as f64 / (2.0 * (self.w as f64).log2())
    }

    /// `g = w / (2 log2 w)`.
    pub fn g(&self) -> f64 {
        self.w as f64 / (2.0 * (self.w as f64).log2())
    }
}

/// Whether a node with this key and rank is marked.
pub fn is_marked(key: Key, rank: u32) -> bool {
    match key.value {
        KeyValue::NegInf => false,
        KeyValue::Finite(v) => v != -(rank as i64),
    }
}

/// Outcome of feeding one unmarked child to the rank fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub efficient: bool,
    pub incremental: bool,
    /// Child rank exceeded the running rank.
    pub overranked: bool,
}

/// Advances the fold state by one unmarked child of rank `child_rank`.
pub fn fold_child(state: &mut RankCache, child_rank: u32, params: &RankParams) -> Step {
    let r = state.rank;
    let efficient = child_rank <= r && child_rank + params.window >= r;
    state.run_len += 1;
    if efficient {
        state.eff_in_run += 1;
    }
    let incremental = (efficient && state.eff_in_run == params.w) || state.run_len == params.threshold;
    if incremental {
        state.rank += 1;
        state.run_len = 0;
        state.eff_in_run = 0;
    }
    Step {
        efficient,
        incremental,
        overranked: child_rank > r,
    }
}

/// Rank state of `id` rebuilt from the cached state of its children.
pub fn recompute_from_children(forest: &Forest, id: NodeId, params: &RankParams) -> RankCache {
    let mut state = RankCache::default();
    for c in forest.children_rev(id) {
        let child = &forest.node(c).rank;
        if !child.marked {
            fold_child(&mut state, child.rank, params);
        }
    }
    state.marked = is_marked(forest.node(id).key, state.rank);
    state
}

/// Recomputes `id` from its children and walks up while anything changes.
pub fn refresh_upwards(forest: &mut Forest, id: NodeId, params: &RankParams) {
    let mut cur = Some(id);
    while let Some(x) = cur {
        let fresh = recompute_from_children(forest, x, params);
        let old = forest.node(x).rank;
        forest.node_mut(x).rank = fresh;
        let visible_change = old.rank != fresh.rank || old.marked != fresh.marked;
        if !visible_change {
            break;
        }
        cur = forest.node(x).parent;
    }
}

/// Re-evaluates only the mark of `id` (after a key change) and propagates.
pub fn refresh_mark(forest: &mut Forest, id: NodeId, params: &RankParams) {
    let n = forest.node(id);
    let marked = is_marked(n.key, n.rank.rank);
    if marked != n.rank.marked {
        forest.node_mut(id).rank.marked = marked;
        if let Some(p) = forest.node(id).parent {
            refresh_upwards(forest, p, params);
        }
    }
}

/// Updates the winner after `loser` was attached as its leftmost child.
/// Returns whether the winner's rank went up.
pub fn on_pair(forest: &mut Forest, winner: NodeId, loser: NodeId, params: &RankParams) -> bool {
    let before = forest.node(winner).rank.rank;
    let loser_state = forest.node(loser).rank;
    if forest.node(winner).parent.is_none() {
        if !loser_state.marked {
            let key = forest.node(winner).key;
            let cache = &mut forest.node_mut(winner).rank;
            fold_child(cache, loser_state.rank, params);
            cache.marked = is_marked(key, cache.rank);
        }
    } else {
        refresh_upwards(forest, winner, params);
    }
    forest.node(winner).rank.rank > before
}

pub fn rank_of(forest: &Forest, id: NodeId) -> u32 {
    forest.node(id).rank.rank
}

/// One unmarked child as seen by its parent's rank fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChildInfo {
    pub node: NodeId,
    pub rank: u32,
    /// Parent's running rank before this child.
    pub rank_before: u32,
    pub efficient: bool,
    pub incremental: bool,
    pub overranked: bool,
}

/// The unmarked children of `id`, right to left, with their classification.
pub fn child_profile(forest: &Forest, id: NodeId, params: &RankParams) -> Vec<ChildInfo> {
    let mut state = RankCache::default();
    forest
        .children_rev(id)
        .filter(|&c| !forest.node(c).rank.marked)
        .map(|c| {
            let rank = forest.node(c).rank.rank;
            let rank_before = state.rank;
            let step = fold_child(&mut state, rank, params);
            ChildInfo {
                node: c,
                rank,
                rank_before,
                efficient: step.efficient,
                incremental: step.incremental,
                overranked: step.overranked,
            }
        })
        .collect()
}

/// `y_i` (1-based, right to left among unmarked children) is efficiently linked.
pub fn is_efficiently_linked(forest: &Forest, parent: NodeId, i: usize, params: &RankParams) -> Option<bool> {
    let profile = child_profile(forest, parent, params);
    profile.get(i.checked_sub(1)?).map(|c| c.efficient)
}

/// Indices (1-based) of `noninc(y_i)`: `y_i` and the maximal run of
/// non-incremental unmarked siblings to its right.
pub fn noninc_set(forest: &Forest, parent: NodeId, i: usize, params: &RankParams) -> Vec<usize> {
    let profile = child_profile(forest, parent, params);
    if i == 0 || i > profile.len() {
        return Vec::new();
    }
    let j = (1..i).rev().find(|&k| profile[k - 1].incremental).unwrap_or(0);
    ((j + 1)..=i).collect()
}

pub fn count_efficient_children(forest: &Forest, id: NodeId, params: &RankParams) -> usize {
    child_profile(forest, id, params).iter().filter(|c| c.efficient).count()
}

pub fn unmarked_child_count(forest: &Forest, id: NodeId) -> usize {
    forest.children(id).filter(|&c| !forest.node(c).rank.marked).count()
}

/// Size of the subtree of `id` after cutting every marked node from its parent.
pub fn unmarked_subtree_size(forest: &Forest, id: NodeId) -> usize {
    let mut size = 0;
    let mut stack = vec![id];
    while let Some(x) = stack.pop() {
        size += 1;
        stack.extend(forest.children(x).filter(|&c| !forest.node(c).rank.marked));
    }
    size
}

/// Evaluates every live node's rank and mark from scratch, ignoring caches.
/// Indexed by node id; dead slots hold `None`.
pub fn evaluate_all(forest: &Forest, params: &RankParams) -> Vec<Option<(u32, bool)>> {
    let mut out: Vec<Option<(u32, bool)>> = vec![None; forest.capacity()];
    for x in forest.postorder() {
        let mut state = RankCache::default();
        for c in forest.children_rev(x) {
            let (rank, marked) = out[c.index()].expect("children precede parents in postorder");
            if !marked {
                fold_child(&mut state, rank, params);
            }
        }
        out[x.index()] = Some((state.rank, is_marked(forest.node(x).key, state.rank)));
    }
    out
}

/// Nodes whose cached rank or mark disagrees with a from-scratch evaluation.
pub fn cache_mismatches(forest: &Forest, params: &RankParams) -> Vec<NodeId> {
    let fresh = evaluate_all(forest, params);
    forest
        .live_ids()
        .filter(|&id| {
            let c = forest.node(id).rank;
            fresh[id.index()] != Some((c.rank, c.marked))
        })
        .collect()
}

/// Upper bound `s_k` on the size of an unmarked heap of rank `k`:
/// `s_0 = 1`, `s_k = (w-1) s_{k-1} + (T-(w-1)) s_{k-W-1}`, where terms with a
/// negative index contribute nothing. Saturates at `u128::MAX`.
pub fn max_unmarked_heap_size(k: u32, params: &RankParams) -> u128 {
    let w = params.w as u128;
    let tail = (params.threshold as u128).saturating_sub(w - 1);
    let lag = params.window as usize + 1;
    let mut s: Vec<u128> = Vec::with_capacity(k as usize + 1);
    s.push(1);
    for i in 1..=k as usize {
        let mut v = (w - 1).saturating_mul(s[i - 1]);
        if i >= lag {
            v = v.saturating_add(tail.saturating_mul(s[i - lag]));
        }
        s.push(v);
    }
    s[k as usize]
}

/// One line of the rank dump format.
pub fn dump_line(forest: &Forest, id: NodeId, params: &RankParams) -> String {
    let n = forest.node(id);
    let eff = child_profile(forest, id, params)
        .iter()
        .map(|c| if c.efficient { "1" } else { "0" })
        .collect::<Vec<_>>()
        .join(",");
    format!(
        "position={} rank={} marked={} eff={}",
        forest.position_of(id),
        n.rank.rank,
        u8::from(n.rank.marked),
        eff
    )
}

/// Rank dump of the whole forest in left-to-right postorder.
pub fn dump(forest: &Forest, params: &RankParams) -> String {
    let mut out = String::new();
    for id in forest.postorder() {
        out.push_str(&dump_line(forest, id, params));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: u32, window: u32, t: u32) -> RankParams {
        RankParams::explicit(d, window, t).unwrap()
    }

    /// Builds a node whose children (right to left) are single nodes keyed so
    /// that they are unmarked at rank 0.
    fn star(children: usize, p: &RankParams) -> (Forest, NodeId) {
        let mut f = Forest::new();
        let root = f.push_new_root(Key::new(-100, 0));
        for i in 0..children {
            let c = f.push_new_root(Key::new(0, i as u64 + 1));
            f.detach(c);
            f.attach_leftmost_child(root, c);
            on_pair(&mut f, root, c, p);
        }
        (f, root)
    }

    #[test]
    fn defaults() {
        let p = RankParams::default();
        assert_eq!((p.d, p.w, p.window, p.threshold), (1, 3, 1, 3072));
        assert!(p.warnings().is_empty());
        assert_eq!(RankParams::explicit(0, 1, 1), Err(ParamError::ZeroD));
        let pd = RankParams::from_exponent(2, 1, 3, ThresholdBase::D).unwrap();
        assert_eq!(pd.threshold, 16);
        assert!(!params(1, 1, 2).warnings().is_empty());
    }

    #[test]
    fn leaf_has_rank_zero() {
        let mut f = Forest::new();
        let x = f.push_new_root(Key::new(0, 0));
        assert_eq!(recompute_from_children(&f, x, &params(1, 1, 4)).rank, 0);
        assert_eq!(rank_of(&f, x), 0);
    }

    #[test]
    fn efficient_case_fires_on_wth_child() {
        let p = params(1, 1, 100);
        let (f, root) = star(3, &p);
        assert_eq!(rank_of(&f, root), 1);
        let prof = child_profile(&f, root, &p);
        assert_eq!(prof.iter().map(|c| c.incremental).collect::<Vec<_>>(), vec![false, false, true]);
    }

    #[test]
    fn on_pair_flags_increment() {
        let p = params(1, 1, 100);
        let (mut f, root) = star(2, &p);
        let c = f.push_new_root(Key::new(0, 50));
        f.detach(c);
        f.attach_leftmost_child(root, c);
        assert!(on_pair(&mut f, root, c, &p));
        let c = f.push_new_root(Key::new(0, 51));
        f.detach(c);
        f.attach_leftmost_child(root, c);
        assert!(!on_pair(&mut f, root, c, &p));
    }

    #[test]
    fn efficiency_window() {
        let p = params(1, 1, 100);
        let mut s = RankCache { rank: 3, ..Default::default() };
        assert!(fold_child(&mut s, 3, &p).efficient);
        let mut s = RankCache { rank: 3, ..Default::default() };
        assert!(!fold_child(&mut s, 1, &p).efficient);
        let mut s = RankCache { rank: 3, ..Default::default() };
        let st = fold_child(&mut s, 4, &p);
        assert!(!st.efficient && st.overranked);
    }

    #[test]
    fn noninc_examples() {
        let p = params(1, 1, 100);
        let (f, root) = star(5, &p);
        assert_eq!(noninc_set(&f, root, 1, &p), vec![1]);
        // y_3 is incremental, so y_4 starts a new run.
        assert_eq!(noninc_set(&f, root, 4, &p), vec![4]);
        assert_eq!(noninc_set(&f, root, 3, &p), vec![1, 2, 3]);
        assert_eq!(is_efficiently_linked(&f, root, 1, &p), Some(true));
        assert_eq!(is_efficiently_linked(&f, root, 9, &p), None);
    }

    #[test]
    fn recurrence_boundary() {
        let p = params(1, 1, 4);
        assert_eq!(max_unmarked_heap_size(0, &p), 1);
        assert_eq!(max_unmarked_heap_size(1, &p), 2);
        assert_eq!(max_unmarked_heap_size(2, &p), 2 * 2 + 2);
    }

    #[test]
    fn neg_inf_is_never_marked() {
        let k = Key {
            value: KeyValue::NegInf,
            serial: 0,
        };
        assert!(!is_marked(k, 7));
        assert!(is_marked(Key::new(-2, 0), 3));
        assert!(!is_marked(Key::new(-3, 0), 3));
    }

    #[test]
    fn dump_format() {
        let p = params(1, 1, 100);
        let (f, root) = star(1, &p);
        let text = dump(&f, &p);
        assert_eq!(text.lines().last().unwrap(), "position=0 rank=0 marked=1 eff=1");
        assert_eq!(dump_line(&f, f.children(root).next().unwrap(), &p), "position=0.0 rank=0 marked=0 eff=");
    }
}
