//! The top DAG: a top tree with identical clusters shared.
//!
//! Nodes are hash-consed on their full structural key, so two clusters share
//! a node exactly when their labels, merge types and children agree. Ids are
//! handed out in creation order and a child always has a smaller id than its
//! parent. Leaves for all labels are created first, which makes a leaf's id
//! equal to its label id.

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::toptree::MergeType;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DagNode {
    Leaf {
        label: u32,
    },
    Inner {
        kind: MergeType,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DagError {
    #[error("child id {child} does not precede node {len}")]
    UnknownChild { child: u32, len: u32 },
    #[error("DAG has no root")]
    NoRoot,
    #[error("merge types are inconsistent with cluster boundaries at node {0}")]
    InconsistentMerge(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DagStats {
    pub nodes: usize,
    pub edges: usize,
    /// Nodes plus edges.
    pub total_size: usize,
    /// Longest root-to-leaf path in edges.
    pub depth: usize,
}

#[derive(Clone, Debug, Default)]
pub struct TopDag {
    nodes: Vec<DagNode>,
    index: FxHashMap<DagNode, u32>,
    root: Option<u32>,
}

impl TopDag {
    pub fn new() -> Self {
        Self::default()
    }

    /// A DAG whose first `labels` nodes are the leaves `0..labels`.
    pub fn with_labels(labels: usize) -> Self {
        let mut dag = Self::new();
        for label in 0..labels as u32 {
            dag.intern_leaf(label);
        }
        dag
    }

    pub fn intern_leaf(&mut self, label: u32) -> u32 {
        self.intern(DagNode::Leaf { label })
    }

    pub fn intern_inner(
        &mut self,
        kind: MergeType,
        left: u32,
        right: u32,
    ) -> Result<u32, DagError> {
        let len = self.nodes.len() as u32;
        for child in [left, right] {
            if child >= len {
                return Err(DagError::UnknownChild { child, len });
            }
        }
        Ok(self.intern(DagNode::Inner { kind, left, right }))
    }

    fn intern(&mut self, node: DagNode) -> u32 {
        let next = self.nodes.len() as u32;
        let id = *self.index.entry(node).or_insert(next);
        if id == next {
            self.nodes.push(node);
        }
        id
    }

    pub fn set_root(&mut self, root: u32) -> Result<(), DagError> {
        if root as usize >= self.nodes.len() {
            return Err(DagError::UnknownChild {
                child: root,
                len: self.nodes.len() as u32,
            });
        }
        self.root = Some(root);
        Ok(())
    }

    /// Root id. Panics on a DAG that was never given a root.
    pub fn root(&self) -> u32 {
        self.root.expect("top DAG has no root")
    }

    pub fn try_root(&self) -> Result<u32, DagError> {
        self.root.ok_or(DagError::NoRoot)
    }

    pub fn node(&self, id: u32) -> DagNode {
        self.nodes[id as usize]
    }

    pub fn nodes(&self) -> &[DagNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, DagNode::Leaf { .. }))
            .count()
    }

    pub fn inner_count(&self) -> usize {
        self.nodes.len() - self.leaf_count()
    }

    pub fn stats(&self) -> DagStats {
        let edges = 2 * self.inner_count();
        DagStats {
            nodes: self.nodes.len(),
            edges,
            total_size: self.nodes.len() + edges,
            depth: self.depth(),
        }
    }

    /// Height of the DAG measured in edges; a lone leaf has depth 0.
    pub fn depth(&self) -> usize {
        let Some(root) = self.root else { return 0 };
        let heights = self.heights();
        heights[root as usize] as usize
    }

    fn heights(&self) -> Vec<u32> {
        let mut h = vec![0u32; self.nodes.len()];
        for (id, node) in self.nodes.iter().enumerate() {
            if let DagNode::Inner { left, right, .. } = *node {
                h[id] = 1 + h[left as usize].max(h[right as usize]);
            }
        }
        h
    }

    /// Number of leaves of the unfolded top tree, which is the node count of
    /// the tree it encodes. Saturates at `u64::MAX`.
    pub fn tree_size(&self) -> u64 {
        let Some(root) = self.root else { return 0 };
        let mut count = vec![0u64; self.nodes.len()];
        for (id, node) in self.nodes.iter().enumerate() {
            count[id] = match *node {
                DagNode::Leaf { .. } => 1,
                DagNode::Inner { left, right, .. } => {
                    count[left as usize].saturating_add(count[right as usize])
                }
            };
        }
        count[root as usize]
    }

    /// Checks that the merge types describe a tree: every vertical merge has
    /// an upper cluster with a bottom boundary node, and the clusters on the
    /// left spine below the root are vertical so the tree has one root.
    pub fn validate(&self) -> Result<(), DagError> {
        let root = self.try_root()?;
        let mut bottom = vec![true; self.nodes.len()];
        for (id, node) in self.nodes.iter().enumerate() {
            if let DagNode::Inner { kind, left, right } = *node {
                let (l, r) = (bottom[left as usize], bottom[right as usize]);
                if kind.is_vertical() && !l {
                    return Err(DagError::InconsistentMerge(id as u32));
                }
                bottom[id] = match kind {
                    MergeType::A | MergeType::D => r,
                    MergeType::C => l,
                    MergeType::B | MergeType::E => false,
                };
            }
        }
        let mut node = root;
        while let DagNode::Inner { kind, left, .. } = self.node(node) {
            if !kind.is_vertical() {
                return Err(DagError::InconsistentMerge(node));
            }
            node = left;
        }
        Ok(())
    }

    /// Pre-order listing of the unfolded top tree. Exponential in the worst
    /// case; meant for tests on small inputs.
    pub fn unfold_preorder(&self) -> Vec<DagNode> {
        let mut out = Vec::new();
        let Some(root) = self.root else { return out };
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            let node = self.node(id);
            match node {
                DagNode::Leaf { .. } => out.push(node),
                DagNode::Inner { kind, left, right } => {
                    out.push(DagNode::Inner {
                        kind,
                        left: 0,
                        right: 0,
                    });
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out
    }

    /// Structural equality of the reachable parts, ignoring id assignment.
    pub fn structurally_eq(&self, other: &TopDag) -> bool {
        let (Some(a), Some(b)) = (self.root, other.root) else {
            return self.root.is_none() && other.root.is_none();
        };
        let mut map: FxHashMap<u32, u32> = FxHashMap::default();
        let mut stack = vec![(a, b)];
        while let Some((x, y)) = stack.pop() {
            match map.get(&x) {
                Some(&seen) if seen == y => continue,
                Some(_) => return false,
                None => {
                    map.insert(x, y);
                }
            }
            match (self.node(x), other.node(y)) {
                (DagNode::Leaf { label: l1 }, DagNode::Leaf { label: l2 }) if l1 == l2 => {}
                (
                    DagNode::Inner {
                        kind: k1,
                        left: l1,
                        right: r1,
                    },
                    DagNode::Inner {
                        kind: k2,
                        left: l2,
                        right: r2,
                    },
                ) if k1 == k2 => {
                    stack.push((r1, r2));
                    stack.push((l1, l2));
                }
                _ => return false,
            }
        }
        true
    }
}
