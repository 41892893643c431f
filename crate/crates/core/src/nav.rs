//! Navigation on the top DAG without decompressing, and full decompression.
//!
//! A [`NavCursor`] names a node of the original tree by the path from the DAG
//! root down to the leaf cluster of the edge entering that node (the dummy
//! edge for the tree root). Each step of the path records whether it went
//! into the left or right child. A second stack keeps the paths of all tree
//! ancestors so that `parent` is a pop.
//!
//! Whether the current node has children or a next sibling is read off the
//! first merge above its leaf cluster that decides it:
//!
//! | merge | entered from | is leaf? | is last child? |
//! |-------|--------------|----------|----------------|
//! | A     | left         | no       | keep going     |
//! | A     | right        | keep going | yes          |
//! | B     | left         | no       | keep going     |
//! | B     | right        | yes      | yes            |
//! | C     | left         | keep going | no           |
//! | C     | right        | yes      | keep going     |
//! | D     | left         | yes      | no             |
//! | D     | right        | keep going | keep going   |
//! | E     | left         | yes      | no             |
//! | E     | right        | yes      | keep going     |
//!
//! Running off the top of the stack means leaf, and last child.

use crate::error::DecodeError;
use crate::topdag::{DagError, DagNode, TopDag};
use crate::toptree::MergeType;
use crate::tree::{LabelTable, LabelledTree, NO_PARENT};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DagStackEntry {
    /// An inner DAG node on the path.
    pub node: u32,
    /// Whether the path continues into its right child.
    pub went_right: bool,
}

#[derive(Clone, Debug)]
pub struct NavCursor<'a> {
    dag: &'a TopDag,
    path: Vec<DagStackEntry>,
    leaf: u32,
    tree_stack: Vec<(Vec<DagStackEntry>, u32)>,
    last_walk: usize,
}

impl PartialEq for NavCursor<'_> {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.dag, other.dag) && self.path == other.path && self.leaf == other.leaf
    }
}

enum Step {
    Stop(bool),
    Continue,
}

impl<'a> NavCursor<'a> {
    /// Cursor on the root of the encoded tree.
    pub fn at_root(dag: &'a TopDag) -> Result<Self, DagError> {
        let root = dag.try_root()?;
        let mut cursor = Self {
            dag,
            path: Vec::new(),
            leaf: root,
            tree_stack: Vec::new(),
            last_walk: 0,
        };
        cursor.descend_left(root);
        Ok(cursor)
    }

    /// The DAG stack: inner nodes from the root and the current leaf cluster.
    pub fn dag_stack(&self) -> (&[DagStackEntry], u32) {
        (&self.path, self.leaf)
    }

    /// Depth of the tree stack, which equals the current node's depth.
    pub fn depth(&self) -> usize {
        self.tree_stack.len()
    }

    /// Number of DAG stack entries inspected by the last upward walk.
    pub fn last_walk_len(&self) -> usize {
        self.last_walk
    }

    /// Label id of the current node.
    pub fn label(&self) -> u32 {
        match self.dag.node(self.leaf) {
            DagNode::Leaf { label } => label,
            DagNode::Inner { .. } => unreachable!("cursor always rests on a leaf cluster"),
        }
    }

    pub fn is_leaf(&mut self) -> bool {
        self.child_walk().is_none()
    }

    pub fn is_last_child(&mut self) -> bool {
        self.sibling_walk().is_none()
    }

    /// Moves to the first child. Returns false, leaving the cursor where it
    /// was, if the node is a leaf.
    pub fn first_child(&mut self) -> bool {
        let Some(at) = self.child_walk() else {
            return false;
        };
        self.tree_stack.push((self.path.clone(), self.leaf));
        self.turn_right_at(at);
        true
    }

    /// Moves to the next sibling. Returns false if there is none.
    pub fn next_sibling(&mut self) -> bool {
        let Some(at) = self.sibling_walk() else {
            return false;
        };
        self.turn_right_at(at);
        true
    }

    /// Moves to the parent. Returns false at the root.
    pub fn parent(&mut self) -> bool {
        match self.tree_stack.pop() {
            Some((path, leaf)) => {
                self.path = path;
                self.leaf = leaf;
                true
            }
            None => false,
        }
    }

    fn kind_of(&self, node: u32) -> MergeType {
        match self.dag.node(node) {
            DagNode::Inner { kind, .. } => kind,
            DagNode::Leaf { .. } => unreachable!("stack entries are inner nodes"),
        }
    }

    // Index of the A/B entry entered from the left, if the node has children.
    fn child_walk(&mut self) -> Option<usize> {
        self.walk(|kind, from_left| {
            use MergeType::*;
            match (kind, from_left) {
                (A | B, true) => Step::Stop(true),
                (B, false) | (C, false) | (D, true) | (E, _) => Step::Stop(false),
                _ => Step::Continue,
            }
        })
    }

    // Index of the C/D/E entry entered from the left, if there is a next sibling.
    fn sibling_walk(&mut self) -> Option<usize> {
        self.walk(|kind, from_left| {
            use MergeType::*;
            match (kind, from_left) {
                (C | D | E, true) => Step::Stop(true),
                (A | B, false) => Step::Stop(false),
                _ => Step::Continue,
            }
        })
    }

    fn walk(&mut self, rule: impl Fn(MergeType, bool) -> Step) -> Option<usize> {
        self.last_walk = 0;
        for i in (0..self.path.len()).rev() {
            self.last_walk += 1;
            let entry = self.path[i];
            match rule(self.kind_of(entry.node), !entry.went_right) {
                Step::Stop(true) => return Some(i),
                Step::Stop(false) => return None,
                Step::Continue => {}
            }
        }
        None
    }

    fn turn_right_at(&mut self, at: usize) {
        self.path.truncate(at + 1);
        self.path[at].went_right = true;
        let DagNode::Inner { right, .. } = self.dag.node(self.path[at].node) else {
            unreachable!("stack entries are inner nodes");
        };
        self.descend_left(right);
    }

    fn descend_left(&mut self, mut node: u32) {
        while let DagNode::Inner { left, .. } = self.dag.node(node) {
            self.path.push(DagStackEntry {
                node,
                went_right: false,
            });
            node = left;
        }
        self.leaf = node;
    }
}

/// Rebuilds the encoded tree.
pub fn decompress(dag: &TopDag, labels: &LabelTable) -> Result<LabelledTree, DecodeError> {
    decompress_counting(dag, labels).map(|(tree, _)| tree)
}

/// As [`decompress`], also returning the number of cluster visits.
pub fn decompress_counting(
    dag: &TopDag,
    labels: &LabelTable,
) -> Result<(LabelledTree, u64), DecodeError> {
    let root = dag.try_root().map_err(|_| DecodeError::BadHeader("root"))?;
    let size = dag.tree_size();
    if size >= NO_PARENT as u64 {
        return Err(DecodeError::TreeSize {
            expected: NO_PARENT as u64 - 1,
            actual: size,
        });
    }

    enum Frame {
        Visit {
            node: u32,
            top: u32,
        },
        Right {
            kind: MergeType,
            right: u32,
            top: u32,
        },
        Join {
            kind: MergeType,
            left_bottom: Option<u32>,
        },
    }

    let n = size as usize;
    let mut parent: Vec<u32> = Vec::with_capacity(n);
    let mut label: Vec<u32> = Vec::with_capacity(n);
    let mut results: Vec<Option<u32>> = Vec::new();
    let mut frames = vec![Frame::Visit {
        node: root,
        top: NO_PARENT,
    }];
    let mut visits = 0u64;
    let mut roots = 0;

    while let Some(frame) = frames.pop() {
        match frame {
            Frame::Visit { node, top } => {
                visits += 1;
                match dag.node(node) {
                    DagNode::Leaf { label: l } => {
                        if top == NO_PARENT {
                            roots += 1;
                            if roots > 1 {
                                return Err(DecodeError::InconsistentMerge);
                            }
                        }
                        results.push(Some(parent.len() as u32));
                        parent.push(top);
                        label.push(l);
                    }
                    DagNode::Inner { kind, left, right } => {
                        frames.push(Frame::Right { kind, right, top });
                        frames.push(Frame::Visit { node: left, top });
                    }
                }
            }
            Frame::Right { kind, right, top } => {
                let left_bottom = results.pop().flatten();
                let right_top = if kind.is_vertical() {
                    left_bottom.ok_or(DecodeError::InconsistentMerge)?
                } else {
                    top
                };
                frames.push(Frame::Join { kind, left_bottom });
                frames.push(Frame::Visit {
                    node: right,
                    top: right_top,
                });
            }
            Frame::Join { kind, left_bottom } => {
                let right_bottom = results.pop().flatten();
                results.push(match kind {
                    MergeType::A | MergeType::D => right_bottom,
                    MergeType::C => left_bottom,
                    MergeType::B | MergeType::E => None,
                });
            }
        }
    }

    // Siblings were created left to right; renumber in pre-order.
    let mut first_child = vec![NO_PARENT; n];
    let mut next_sibling = vec![NO_PARENT; n];
    let mut last_child = vec![NO_PARENT; n];
    for (v, &p) in parent.iter().enumerate().skip(1) {
        let p = p as usize;
        if last_child[p] == NO_PARENT {
            first_child[p] = v as u32;
        } else {
            next_sibling[last_child[p] as usize] = v as u32;
        }
        last_child[p] = v as u32;
    }
    let mut new_id = vec![0u32; n];
    let mut out_parent = Vec::with_capacity(n);
    let mut out_label = Vec::with_capacity(n);
    let mut stack = vec![0u32];
    while let Some(v) = stack.pop() {
        let v = v as usize;
        new_id[v] = out_parent.len() as u32;
        out_parent.push(match parent[v] {
            NO_PARENT => NO_PARENT,
            p => new_id[p as usize],
        });
        out_label.push(label[v]);
        if next_sibling[v] != NO_PARENT {
            stack.push(next_sibling[v]);
        }
        if first_child[v] != NO_PARENT {
            stack.push(first_child[v]);
        }
    }
    let tree = LabelledTree::from_parts(labels.clone(), out_label, out_parent)
        .map_err(DecodeError::Labels)?;
    Ok((tree, visits))
}
