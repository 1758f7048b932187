//! Ordered forest of heap-ordered trees.
//!
//! Nodes live in an arena and are never reused, so a [`NodeId`] doubles as the
//! insertion handle returned to callers. Every node carries the four links a
//! pointer-machine heap needs (parent, left/right sibling, leftmost child) plus
//! a rightmost-child link so the analysis layer can walk children in the order
//! they were attached.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::key::Key;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Cached rank bookkeeping for one node, maintained by [`crate::rank`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RankCache {
    pub rank: u32,
    /// Length of the current run of non-incremental unmarked children.
    pub run_len: u32,
    /// Efficiently linked children inside the current run.
    pub eff_in_run: u32,
    pub marked: bool,
}

#[derive(Debug, Clone)]
pub struct HeapNode {
    pub key: Key,
    pub parent: Option<NodeId>,
    pub left: Option<NodeId>,
    pub right: Option<NodeId>,
    pub first_child: Option<NodeId>,
    pub last_child: Option<NodeId>,
    pub live: bool,
    pub paired_in_current_extractmin: bool,
    pub rank: RankCache,
}

impl HeapNode {
    fn new(key: Key) -> Self {
        HeapNode {
            key,
            parent: None,
            left: None,
            right: None,
            first_child: None,
            last_child: None,
            live: true,
            paired_in_current_extractmin: false,
            rank: RankCache::default(),
        }
    }
}

/// Location of a node counted from the right: the first entry indexes the
/// roots (0 = rightmost root), each later entry indexes children (0 =
/// rightmost child). Adding new leftmost siblings never changes a position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Position(pub Vec<u32>);

impl Position {
    pub fn root(index: u32) -> Self {
        Position(vec![index])
    }

    pub fn is_root(&self) -> bool {
        self.0.len() == 1
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, idx) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{idx}")?;
        }
        Ok(())
    }
}

impl FromStr for Position {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let path = s
            .split('.')
            .map(|p| p.parse::<u32>().map_err(|e| format!("bad position `{s}`: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        if path.is_empty() {
            return Err("empty position".into());
        }
        Ok(Position(path))
    }
}

/// The four neighbours of a node. Used to detect structural change.
pub type Links = (Option<NodeId>, Option<NodeId>, Option<NodeId>, Option<NodeId>);

#[derive(Debug, Clone, Default)]
pub struct Forest {
    nodes: Vec<HeapNode>,
    leftmost_root: Option<NodeId>,
    rightmost_root: Option<NodeId>,
    root_count: usize,
    node_count: usize,
}

impl Forest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn root_count(&self) -> usize {
        self.root_count
    }

    pub fn is_empty(&self) -> bool {
        self.node_count == 0
    }

    /// Number of nodes ever allocated (live or not).
    pub fn capacity(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &HeapNode {
        &self.nodes[id.index()]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut HeapNode {
        &mut self.nodes[id.index()]
    }

    pub fn get(&self, id: NodeId) -> Option<&HeapNode> {
        self.nodes.get(id.index()).filter(|n| n.live)
    }

    pub fn is_live(&self, id: NodeId) -> bool {
        self.get(id).is_some()
    }

    pub fn leftmost_root(&self) -> Option<NodeId> {
        self.leftmost_root
    }

    pub fn rightmost_root(&self) -> Option<NodeId> {
        self.rightmost_root
    }

    pub fn links(&self, id: NodeId) -> Links {
        let n = self.node(id);
        (n.parent, n.left, n.right, n.first_child)
    }

    /// Allocates a node and places it as the new leftmost root.
    pub fn push_new_root(&mut self, key: Key) -> NodeId {
        let id = NodeId(u32::try_from(self.nodes.len()).expect("node arena overflow"));
        self.nodes.push(HeapNode::new(key));
        self.node_count += 1;
        self.push_leftmost_root(id);
        id
    }

    /// Live node ids in allocation order.
    pub fn live_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.live)
            .map(|(i, _)| NodeId(i as u32))
    }

    pub fn roots(&self) -> Siblings<'_> {
        Siblings {
            forest: self,
            next: self.leftmost_root,
            rightward: true,
        }
    }

    /// Roots from the rightmost one, i.e. in right-based index order.
    pub fn roots_rev(&self) -> Siblings<'_> {
        Siblings {
            forest: self,
            next: self.rightmost_root,
            rightward: false,
        }
    }

    pub fn children(&self, id: NodeId) -> Siblings<'_> {
        Siblings {
            forest: self,
            next: self.node(id).first_child,
            rightward: true,
        }
    }

    /// Children from the rightmost one: the order in which they were attached.
    pub fn children_rev(&self, id: NodeId) -> Siblings<'_> {
        Siblings {
            forest: self,
            next: self.node(id).last_child,
            rightward: false,
        }
    }

    pub fn child_count(&self, id: NodeId) -> usize {
        self.children(id).count()
    }

    pub fn is_root(&self, id: NodeId) -> bool {
        self.node(id).parent.is_none()
    }

    fn push_leftmost_root(&mut self, id: NodeId) {
        let old = self.leftmost_root;
        {
            let n = self.node_mut(id);
            n.parent = None;
            n.left = None;
            n.right = old;
        }
        match old {
            Some(o) => self.node_mut(o).left = Some(id),
            None => self.rightmost_root = Some(id),
        }
        self.leftmost_root = Some(id);
        self.root_count += 1;
    }

    /// Unlinks a node (with its subtree) from its parent or from the root list.
    pub fn detach(&mut self, id: NodeId) {
        let (parent, left, right) = {
            let n = self.node(id);
            (n.parent, n.left, n.right)
        };
        match left {
            Some(l) => self.node_mut(l).right = right,
            None => match parent {
                Some(p) => self.node_mut(p).first_child = right,
                None => self.leftmost_root = right,
            },
        }
        match right {
            Some(r) => self.node_mut(r).left = left,
            None => match parent {
                Some(p) => self.node_mut(p).last_child = left,
                None => self.rightmost_root = left,
            },
        }
        if parent.is_none() {
            self.root_count -= 1;
        }
        let n = self.node_mut(id);
        n.parent = None;
        n.left = None;
        n.right = None;
    }

    /// Detaches `id` and makes it the leftmost root.
    pub fn move_to_leftmost_root(&mut self, id: NodeId) {
        self.detach(id);
        self.push_leftmost_root(id);
    }

    /// Attaches the detached node `child` as the leftmost child of `parent`.
    pub fn attach_leftmost_child(&mut self, parent: NodeId, child: NodeId) {
        let old = self.node(parent).first_child;
        {
            let c = self.node_mut(child);
            c.parent = Some(parent);
            c.left = None;
            c.right = old;
        }
        match old {
            Some(o) => self.node_mut(o).left = Some(child),
            None => self.node_mut(parent).last_child = Some(child),
        }
        self.node_mut(parent).first_child = Some(child);
    }

    /// Inserts the detached node `new` immediately to the left of `anchor`,
    /// sharing its parent (or the root list).
    pub fn insert_left_of(&mut self, anchor: NodeId, new: NodeId) {
        let (parent, left) = {
            let a = self.node(anchor);
            (a.parent, a.left)
        };
        {
            let n = self.node_mut(new);
            n.parent = parent;
            n.left = left;
            n.right = Some(anchor);
        }
        self.node_mut(anchor).left = Some(new);
        match left {
            Some(l) => self.node_mut(l).right = Some(new),
            None => match parent {
                Some(p) => self.node_mut(p).first_child = Some(new),
                None => self.leftmost_root = Some(new),
            },
        }
        if parent.is_none() {
            self.root_count += 1;
        }
    }

    /// Deletes the root `id`; its children take its place in the root list,
    /// keeping their order.
    pub fn remove_root(&mut self, id: NodeId) {
        debug_assert!(self.is_root(id));
        let (left, right, first, last) = {
            let n = self.node(id);
            (n.left, n.right, n.first_child, n.last_child)
        };
        let kids: Vec<NodeId> = self.children(id).collect();
        for &c in &kids {
            self.node_mut(c).parent = None;
        }
        match (first, last) {
            (Some(f), Some(l)) => {
                self.node_mut(f).left = left;
                self.node_mut(l).right = right;
                match left {
                    Some(x) => self.node_mut(x).right = Some(f),
                    None => self.leftmost_root = Some(f),
                }
                match right {
                    Some(x) => self.node_mut(x).left = Some(l),
                    None => self.rightmost_root = Some(l),
                }
            }
            _ => {
                match left {
                    Some(x) => self.node_mut(x).right = right,
                    None => self.leftmost_root = right,
                }
                match right {
                    Some(x) => self.node_mut(x).left = left,
                    None => self.rightmost_root = left,
                }
            }
        }
        self.root_count = self.root_count - 1 + kids.len();
        self.node_count -= 1;
        let n = self.node_mut(id);
        n.live = false;
        n.parent = None;
        n.left = None;
        n.right = None;
        n.first_child = None;
        n.last_child = None;
    }

    /// Right-based index of `id` among its siblings.
    pub fn right_index(&self, id: NodeId) -> u32 {
        let mut i = 0;
        let mut cur = self.node(id).right;
        while let Some(c) = cur {
            i += 1;
            cur = self.node(c).right;
        }
        i
    }

    pub fn position_of(&self, id: NodeId) -> Position {
        let mut path = Vec::new();
        let mut cur = Some(id);
        while let Some(c) = cur {
            path.push(self.right_index(c));
            cur = self.node(c).parent;
        }
        path.reverse();
        Position(path)
    }

    pub fn resolve(&self, pos: &Position) -> Option<NodeId> {
        let mut iter = pos.0.iter();
        let first = *iter.next()?;
        let mut cur = self.roots_rev().nth(first as usize)?;
        for &idx in iter {
            cur = self.children_rev(cur).nth(idx as usize)?;
        }
        Some(cur)
    }

    pub fn subtree_size(&self, id: NodeId) -> usize {
        let mut size = 0;
        let mut stack = vec![id];
        while let Some(x) = stack.pop() {
            size += 1;
            stack.extend(self.children(x));
        }
        size
    }

    /// Left-to-right postorder of the whole forest.
    pub fn postorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.node_count);
        for r in self.roots() {
            self.postorder_from(r, &mut out);
        }
        out
    }

    fn postorder_from(&self, root: NodeId, out: &mut Vec<NodeId>) {
        // (node, children already expanded)
        let mut stack = vec![(root, false)];
        while let Some((x, expanded)) = stack.pop() {
            if expanded {
                out.push(x);
            } else {
                stack.push((x, true));
                let kids: Vec<NodeId> = self.children(x).collect();
                for &c in kids.iter().rev() {
                    stack.push((c, false));
                }
            }
        }
    }

    /// Balanced-parentheses encoding of shape and marks, roots left to right.
    pub fn structure_code(&self) -> String {
        let mut out = String::with_capacity(self.node_count * 3);
        for r in self.roots() {
            self.encode_subtree(r, &mut out);
        }
        out
    }

    fn encode_subtree(&self, root: NodeId, out: &mut String) {
        enum Step {
            Open(NodeId),
            Close,
        }
        let mut stack = vec![Step::Open(root)];
        while let Some(step) = stack.pop() {
            match step {
                Step::Close => out.push(')'),
                Step::Open(x) => {
                    out.push('(');
                    out.push(if self.node(x).rank.marked { 'm' } else { 'u' });
                    stack.push(Step::Close);
                    let kids: Vec<NodeId> = self.children(x).collect();
                    for &c in kids.iter().rev() {
                        stack.push(Step::Open(c));
                    }
                }
            }
        }
    }

    /// Checks link symmetry, counts and heap order. Returns a description of
    /// the first problem found.
    pub fn check_consistency(&self) -> Result<(), String> {
        let mut seen = 0usize;
        let mut roots = 0usize;
        let mut prev: Option<NodeId> = None;
        for r in self.roots() {
            roots += 1;
            let n = self.node(r);
            if !n.live || n.parent.is_some() || n.left != prev {
                return Err(format!("root list broken at {r}"));
            }
            prev = Some(r);
            let mut stack = vec![r];
            while let Some(x) = stack.pop() {
                seen += 1;
                let mut last = None;
                for c in self.children(x) {
                    let cn = self.node(c);
                    if !cn.live || cn.parent != Some(x) || cn.left != last {
                        return Err(format!("child list of {x} broken at {c}"));
                    }
                    if cn.key <= self.node(x).key {
                        return Err(format!("heap order violated between {x} and {c}"));
                    }
                    last = Some(c);
                    stack.push(c);
                }
                if self.node(x).last_child != last {
                    return Err(format!("last child of {x} inconsistent"));
                }
            }
        }
        if self.rightmost_root != prev {
            return Err("rightmost root inconsistent".into());
        }
        if roots != self.root_count {
            return Err(format!("root count {} but {} roots linked", self.root_count, roots));
        }
        if seen != self.node_count {
            return Err(format!("node count {} but {} reachable", self.node_count, seen));
        }
        Ok(())
    }
}

/// Iterator over a sibling list in one direction.
pub struct Siblings<'a> {
    forest: &'a Forest,
    next: Option<NodeId>,
    rightward: bool,
}

impl Iterator for Siblings<'_> {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        let cur = self.next?;
        let n = self.forest.node(cur);
        self.next = if self.rightward { n.right } else { n.left };
        Some(cur)
    }
}
