//! Top tree construction by iterated cluster merging.
//!
//! The input tree is copied into an [`AuxTree`] with one extra dummy edge
//! above the root. Every aux edge stands for one cluster, initially a leaf
//! cluster carrying the label of the edge's lower endpoint. Each iteration
//! runs a horizontal step (chosen by a [`HorizontalCombiner`], topped up by
//! the standard sweep when it merges too little) and then a vertical step.
//! No edge takes part in more than one merge per iteration. Once only the
//! dummy edge and one other edge remain, a final type-A merge joins them.
//!
//! Every new cluster is interned into the [`TopDag`] as it is created.

use std::fmt;

use crate::repair::ClusterHasher;
use crate::topdag::TopDag;
use crate::tree::LabelledTree;

/// How two clusters were joined.
///
/// `A` and `B` are vertical: the left child is the upper cluster. `A` keeps
/// the lower cluster's bottom boundary node, `B` has none. `C`, `D` and `E`
/// are horizontal merges of neighbouring clusters with a common top node;
/// `C` keeps the left cluster's bottom boundary, `D` the right one's, `E`
/// has no bottom boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum MergeType {
    A = 0,
    B = 1,
    C = 2,
    D = 3,
    E = 4,
}

impl MergeType {
    pub const ALL: [MergeType; 5] = [Self::A, Self::B, Self::C, Self::D, Self::E];

    pub fn from_u8(v: u8) -> Option<Self> {
        Self::ALL.get(v as usize).copied()
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, Self::A | Self::B)
    }

    /// Whether the merged cluster has a bottom boundary node.
    pub fn has_bottom(self) -> bool {
        matches!(self, Self::A | Self::C | Self::D)
    }
}

impl fmt::Display for MergeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Self::A => 'A',
            Self::B => 'B',
            Self::C => 'C',
            Self::D => 'D',
            Self::E => 'E',
        };
        write!(f, "{c}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TopNode {
    Leaf {
        label: u32,
    },
    Inner {
        kind: MergeType,
        left: u32,
        right: u32,
    },
}

/// A full binary tree of clusters.
#[derive(Clone, Debug)]
pub struct TopTree {
    nodes: Vec<TopNode>,
    root: u32,
    height: u32,
    iterations: u32,
}

impl TopTree {
    pub fn nodes(&self) -> &[TopNode] {
        &self.nodes
    }

    pub fn node(&self, id: u32) -> TopNode {
        self.nodes[id as usize]
    }

    pub fn root(&self) -> u32 {
        self.root
    }

    /// Edges on the longest root-to-leaf path.
    pub fn height(&self) -> u32 {
        self.height
    }

    /// Merge iterations performed before the final root merge.
    pub fn iterations(&self) -> u32 {
        self.iterations
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
            .filter(|n| matches!(n, TopNode::Leaf { .. }))
            .count()
    }

    /// Pre-order listing, shaped like [`TopDag::unfold_preorder`].
    pub fn preorder(&self) -> Vec<crate::topdag::DagNode> {
        use crate::topdag::DagNode;
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            match self.node(id) {
                TopNode::Leaf { label } => out.push(DagNode::Leaf { label }),
                TopNode::Inner { kind, left, right } => {
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
}

/// Knobs for [`build_top_tree`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildOptions {
    /// If a combiner's horizontal step shrinks the edge count by less than
    /// this factor, the standard sweep runs over the edges it left unmerged.
    pub min_merge_ratio: f64,
    /// Seed of the cluster hash.
    pub hash_seed: u64,
}

pub const DEFAULT_MIN_MERGE_RATIO: f64 = 1.26;
pub const DEFAULT_HASH_SEED: u64 = 0x5EED_7017_C0DE_D46A;

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            min_merge_ratio: DEFAULT_MIN_MERGE_RATIO,
            hash_seed: DEFAULT_HASH_SEED,
        }
    }
}

/// Strategy for the horizontal step.
///
/// An implementation inspects the [`AuxTree`] and calls
/// [`AuxTree::merge_horizontal`] for the pairs it wants joined, returning the
/// number of merges it made. The aux tree refuses a second merge of an edge
/// within the same iteration.
pub trait HorizontalCombiner {
    fn horizontal_step(&mut self, aux: &mut AuxTree) -> usize;
}

/// The plain left-to-right sweep.
#[derive(Clone, Copy, Debug, Default)]
pub struct ClassicCombiner;

impl HorizontalCombiner for ClassicCombiner {
    fn horizontal_step(&mut self, aux: &mut AuxTree) -> usize {
        standard_horizontal_step(aux)
    }
}

/// Greedy left-to-right pairing of neighbouring sibling edges where at least
/// one of the two is a leaf edge. Edges already merged this iteration are
/// skipped.
pub fn standard_horizontal_step(aux: &mut AuxTree) -> usize {
    let mut merges = 0;
    for i in 0..aux.active.len() {
        let p = aux.active[i];
        if p == aux.super_root {
            continue;
        }
        let mut j = 0;
        while j + 1 < aux.children[p as usize].len() {
            let l = aux.children[p as usize][j];
            let r = aux.children[p as usize][j + 1];
            if aux.merge_horizontal(l, r).is_some() {
                merges += 1;
                j += 2;
            } else {
                j += 1;
            }
        }
    }
    aux.compact();
    merges
}

/// Pairs consecutive edges top-down along every path of single-child nodes.
/// The dummy edge above the root is never merged here.
pub fn vertical_step(aux: &mut AuxTree) -> usize {
    let mut merges = 0;
    let tree_root = aux.tree_root;
    for i in 0..aux.active.len() {
        let t = aux.active[i];
        if t == aux.super_root || !aux.alive[t as usize] {
            continue;
        }
        // A single-child node below the root continues a path from above.
        if t != tree_root && aux.children[t as usize].len() == 1 {
            continue;
        }
        for j in 0..aux.children[t as usize].len() {
            let mut cur = aux.children[t as usize][j];
            while aux.children[cur as usize].len() == 1 {
                let next = aux.children[cur as usize][0];
                if !aux.is_merged(cur) && !aux.is_merged(next) {
                    aux.merge_vertical(cur, next);
                    merges += 1;
                }
                cur = next;
            }
        }
    }
    aux.compact();
    merges
}

/// Working state of the construction: a contracted copy of the input tree
/// whose edges carry the clusters built so far.
///
/// Edges are named by their lower endpoint. The super root above the tree
/// root only exists to hold the dummy edge.
pub struct AuxTree {
    super_root: u32,
    tree_root: u32,
    parent: Vec<u32>,
    children: Vec<Vec<u32>>,
    // Position within the parent's child list at the start of the step.
    pos: Vec<u32>,
    alive: Vec<bool>,
    cluster: Vec<u32>,
    merged_in: Vec<u32>,
    iteration: u32,
    // Nodes with at least one child, in document order.
    active: Vec<u32>,
    edges: usize,

    top: Vec<TopNode>,
    heights: Vec<u32>,
    hashes: Vec<u64>,
    dag_of: Vec<u32>,
    dag: TopDag,
    hasher: ClusterHasher,
}

impl AuxTree {
    pub fn new(tree: &LabelledTree, hash_seed: u64) -> Self {
        let n = tree.len();
        let super_root = n as u32;
        let hasher = ClusterHasher::new(hash_seed);
        let mut dag = TopDag::with_labels(tree.labels().len());

        let mut parent = Vec::with_capacity(n + 1);
        parent.extend_from_slice(tree.parents());
        parent[0] = super_root;
        parent.push(u32::MAX);

        let mut children: Vec<Vec<u32>> =
            (0..n as u32).map(|v| tree.children(v).to_vec()).collect();
        children.push(vec![0]);

        let mut pos = vec![0u32; n + 1];
        for ch in &children {
            for (i, &c) in ch.iter().enumerate() {
                pos[c as usize] = i as u32;
            }
        }

        let mut active: Vec<u32> = (0..n as u32)
            .filter(|&v| !children[v as usize].is_empty())
            .collect();
        active.push(super_root);

        let mut top = Vec::with_capacity(2 * n);
        let mut hashes = Vec::with_capacity(2 * n);
        let mut dag_of = Vec::with_capacity(2 * n);
        for &label in tree.node_labels() {
            top.push(TopNode::Leaf { label });
            hashes.push(hasher.leaf(label));
            dag_of.push(dag.intern_leaf(label));
        }
        let mut heights = Vec::with_capacity(2 * n);
        heights.resize(n, 0);

        Self {
            super_root,
            tree_root: 0,
            parent,
            children,
            pos,
            alive: vec![true; n + 1],
            cluster: (0..n as u32).chain([u32::MAX]).collect(),
            merged_in: vec![0; n + 1],
            iteration: 0,
            active,
            edges: n,
            top,
            heights,
            hashes,
            dag_of,
            dag,
            hasher,
        }
    }

    /// Current number of edges, the dummy edge included.
    pub fn edge_count(&self) -> usize {
        self.edges
    }

    /// Nodes that currently have children, in document order, excluding the
    /// super root.
    pub fn parents(&self) -> impl Iterator<Item = u32> + '_ {
        self.active
            .iter()
            .copied()
            .filter(move |&v| v != self.super_root && self.alive[v as usize])
    }

    /// Lower endpoints of the child edges of `node`, left to right. Within a
    /// step this may list edges that were already merged away.
    pub fn children(&self, node: u32) -> &[u32] {
        &self.children[node as usize]
    }

    pub fn is_alive(&self, edge: u32) -> bool {
        self.alive[edge as usize]
    }

    /// An edge whose lower endpoint has no children, i.e. a cluster without a
    /// bottom boundary node.
    pub fn is_leaf_edge(&self, edge: u32) -> bool {
        self.children[edge as usize].is_empty()
    }

    pub fn is_merged(&self, edge: u32) -> bool {
        self.merged_in[edge as usize] == self.iteration
    }

    /// Hash of the cluster on `edge`.
    pub fn hash(&self, edge: u32) -> u64 {
        self.hashes[self.cluster[edge as usize] as usize]
    }

    /// Top tree id of the cluster on `edge`.
    pub fn cluster(&self, edge: u32) -> u32 {
        self.cluster[edge as usize]
    }

    /// The merge type joining neighbouring sibling edges `left` and `right`,
    /// or `None` if they may not be merged now.
    pub fn horizontal_kind(&self, left: u32, right: u32) -> Option<MergeType> {
        let (l, r) = (left as usize, right as usize);
        if l >= self.alive.len() || r >= self.alive.len() {
            return None;
        }
        if !self.alive[l] || !self.alive[r] || self.is_merged(left) || self.is_merged(right) {
            return None;
        }
        let p = self.parent[l];
        if p != self.parent[r] || p == self.super_root || self.pos[r] != self.pos[l] + 1 {
            return None;
        }
        match (self.is_leaf_edge(left), self.is_leaf_edge(right)) {
            (false, true) => Some(MergeType::C),
            (true, false) => Some(MergeType::D),
            (true, true) => Some(MergeType::E),
            (false, false) => None,
        }
    }

    /// Merges two neighbouring sibling edges. Returns the merge type, or
    /// `None` (leaving the tree untouched) if the pair is not mergeable.
    pub fn merge_horizontal(&mut self, left: u32, right: u32) -> Option<MergeType> {
        let kind = self.horizontal_kind(left, right)?;
        let (keep, drop) = match kind {
            MergeType::D => (right, left),
            _ => (left, right),
        };
        let c = self.new_cluster(kind, left, right);
        self.alive[drop as usize] = false;
        self.cluster[keep as usize] = c;
        self.merged_in[keep as usize] = self.iteration;
        self.merged_in[drop as usize] = self.iteration;
        self.edges -= 1;
        Some(kind)
    }

    // `upper` is the edge above `mid`, `lower` the only edge below it.
    fn merge_vertical(&mut self, upper: u32, lower: u32) {
        let kind = if self.is_leaf_edge(lower) {
            MergeType::B
        } else {
            MergeType::A
        };
        let c = self.new_cluster(kind, upper, lower);
        let p = self.parent[upper as usize];
        let slot = self.pos[upper as usize];
        self.children[p as usize][slot as usize] = lower;
        self.parent[lower as usize] = p;
        self.pos[lower as usize] = slot;
        self.alive[upper as usize] = false;
        self.children[upper as usize] = Vec::new();
        self.cluster[lower as usize] = c;
        self.merged_in[lower as usize] = self.iteration;
        self.edges -= 1;
    }

    fn new_cluster(&mut self, kind: MergeType, left_edge: u32, right_edge: u32) -> u32 {
        let l = self.cluster[left_edge as usize] as usize;
        let r = self.cluster[right_edge as usize] as usize;
        self.push_cluster(kind, l, r)
    }

    fn push_cluster(&mut self, kind: MergeType, l: usize, r: usize) -> u32 {
        let id = self.top.len() as u32;
        self.top.push(TopNode::Inner {
            kind,
            left: l as u32,
            right: r as u32,
        });
        self.heights.push(1 + self.heights[l].max(self.heights[r]));
        self.hashes
            .push(self.hasher.inner(kind, self.hashes[l], self.hashes[r]));
        let dag_id = self
            .dag
            .intern_inner(kind, self.dag_of[l], self.dag_of[r])
            .expect("children are interned before their parent");
        self.dag_of.push(dag_id);
        id
    }

    // Drops dead entries from child lists and refreshes positions.
    pub(crate) fn compact(&mut self) {
        let Self {
            active,
            children,
            alive,
            pos,
            ..
        } = self;
        active.retain(|&v| alive[v as usize]);
        for &v in active.iter() {
            let ch = &mut children[v as usize];
            ch.retain(|&c| alive[c as usize]);
            for (i, &c) in ch.iter().enumerate() {
                pos[c as usize] = i as u32;
            }
        }
    }

    pub(crate) fn start_iteration(&mut self) {
        self.iteration += 1;
    }

    fn final_root_merge(&mut self) -> u32 {
        assert_eq!(self.edges, 2, "final merge needs exactly two edges");
        let ch = &self.children[self.tree_root as usize];
        assert_eq!(ch.len(), 1, "root must have a single remaining edge");
        let rest = ch[0];
        self.new_cluster(MergeType::A, self.tree_root, rest)
    }

    fn finish(mut self, iterations: u32) -> (TopTree, TopDag) {
        let root = match self.edges {
            1 => self.cluster[self.tree_root as usize],
            _ => self.final_root_merge(),
        };
        self.dag
            .set_root(self.dag_of[root as usize])
            .expect("root is interned");
        let tree = TopTree {
            height: self.heights[root as usize],
            nodes: self.top,
            root,
            iterations,
        };
        (tree, self.dag)
    }
}

/// Builds the top tree of `tree` and its top DAG.
pub fn build_top_tree(
    tree: &LabelledTree,
    combiner: &mut dyn HorizontalCombiner,
    options: &BuildOptions,
) -> (TopTree, TopDag) {
    let mut aux = AuxTree::new(tree, options.hash_seed);
    let mut iterations = 0;
    while aux.edge_count() > 2 {
        aux.start_iteration();
        let before = aux.edge_count();
        combiner.horizontal_step(&mut aux);
        aux.compact();
        let after = aux.edge_count();
        if (before as f64) < options.min_merge_ratio * after as f64 {
            standard_horizontal_step(&mut aux);
        }
        vertical_step(&mut aux);
        assert!(
            aux.edge_count() < before,
            "merge iteration made no progress"
        );
        iterations += 1;
    }
    aux.finish(iterations)
}

/// Builds with the classic combiner and default options.
pub fn build_classic(tree: &LabelledTree) -> (TopTree, TopDag) {
    build_top_tree(tree, &mut ClassicCombiner, &BuildOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topdag::DagNode;
    use crate::tree::{build_tree, TreeEvent};
    use MergeType::*;

    fn parse(s: &str) -> LabelledTree {
        // "a(b,c)" style
        let mut events = Vec::new();
        let mut label = String::new();
        let flush = |label: &mut String, events: &mut Vec<TreeEvent>| {
            if !label.is_empty() {
                events.push(TreeEvent::Open(label.as_bytes().to_vec()));
                label.clear();
                true
            } else {
                false
            }
        };
        let mut pending_leaf = false;
        for ch in s.chars() {
            match ch {
                '(' => {
                    flush(&mut label, &mut events);
                    pending_leaf = false;
                }
                ',' | ')' => {
                    if flush(&mut label, &mut events) || pending_leaf {
                        events.push(TreeEvent::Close);
                    }
                    pending_leaf = false;
                    if ch == ')' {
                        events.push(TreeEvent::Close);
                    }
                }
                c => {
                    label.push(c);
                    pending_leaf = true;
                }
            }
        }
        if flush(&mut label, &mut events) {
            events.push(TreeEvent::Close);
        }
        build_tree(events).unwrap()
    }

    fn leaf(label: u32) -> DagNode {
        DagNode::Leaf { label }
    }

    fn inner(kind: MergeType) -> DagNode {
        DagNode::Inner {
            kind,
            left: 0,
            right: 0,
        }
    }

    #[test]
    fn parse_helper() {
        assert_eq!(format!("{:?}", parse("a(b,c)")), "a(b,c)");
        assert_eq!(format!("{:?}", parse("a(b(c),d)")), "a(b(c),d)");
        assert_eq!(format!("{:?}", parse("a")), "a");
    }

    #[test]
    fn star_of_two() {
        let (tt, dag) = build_classic(&parse("a(b,c)"));
        assert_eq!(
            tt.preorder(),
            vec![inner(A), leaf(0), inner(E), leaf(1), leaf(2)]
        );
        assert_eq!(tt.len(), 5);
        assert_eq!(tt.height(), 2);
        assert_eq!(dag.stats().nodes, 5);
        assert_eq!(dag.stats().edges, 4);
    }

    #[test]
    fn chain_of_three() {
        let (tt, _) = build_classic(&parse("a(b(c))"));
        assert_eq!(
            tt.preorder(),
            vec![inner(A), leaf(0), inner(B), leaf(1), leaf(2)]
        );
        assert_eq!(tt.iterations(), 1);
    }

    #[test]
    fn single_node() {
        let (tt, dag) = build_classic(&parse("a"));
        assert_eq!(tt.preorder(), vec![leaf(0)]);
        assert_eq!(tt.iterations(), 0);
        assert_eq!(tt.height(), 0);
        assert_eq!(dag.root(), 0);
    }

    #[test]
    fn single_edge() {
        let (tt, _) = build_classic(&parse("a(b)"));
        assert_eq!(tt.preorder(), vec![inner(A), leaf(0), leaf(1)]);
        assert_eq!(tt.iterations(), 0);
    }

    #[test]
    fn repeated_leaf_shares() {
        let (tt, dag) = build_classic(&parse("a(b,b)"));
        assert_eq!(tt.len(), 5);
        let s = dag.stats();
        assert_eq!((s.nodes, s.edges, s.total_size, s.depth), (4, 4, 8, 2));
    }

    fn aux_for(s: &str) -> AuxTree {
        let t = parse(s);
        let mut aux = AuxTree::new(&t, 1);
        aux.start_iteration();
        aux
    }

    fn kinds(aux: &AuxTree) -> Vec<MergeType> {
        aux.top
            .iter()
            .filter_map(|n| match n {
                TopNode::Inner { kind, .. } => Some(*kind),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn horizontal_leaf_triple() {
        let mut aux = aux_for("r(x,y,z)");
        assert_eq!(standard_horizontal_step(&mut aux), 1);
        assert_eq!(kinds(&aux), vec![E]);
        assert_eq!(aux.children(0), &[1, 3]);
    }

    #[test]
    fn horizontal_rule_table() {
        let mut aux = aux_for("r(x(y),z)");
        assert_eq!(standard_horizontal_step(&mut aux), 1);
        assert_eq!(kinds(&aux), vec![C]);

        let mut aux = aux_for("r(z,x(y))");
        assert_eq!(standard_horizontal_step(&mut aux), 1);
        assert_eq!(kinds(&aux), vec![D]);
        assert_eq!(aux.children(0), &[2]);

        let mut aux = aux_for("r(x(y),z(w))");
        assert_eq!(standard_horizontal_step(&mut aux), 0);
    }

    #[test]
    fn vertical_rules() {
        let mut aux = aux_for("r(u(v(w)))");
        // r is the tree root: edges r->u, u->v, v->w; pair the top two.
        assert_eq!(vertical_step(&mut aux), 1);
        assert_eq!(kinds(&aux), vec![A]);

        let mut aux = aux_for("r(u(v),q)");
        assert_eq!(vertical_step(&mut aux), 1);
        assert_eq!(kinds(&aux), vec![B]);

        let mut aux = aux_for("r(u(v(w(x,y))),q)");
        assert_eq!(vertical_step(&mut aux), 1);
        assert_eq!(kinds(&aux), vec![A]);

        let mut aux = aux_for("a(b,c,d)");
        assert_eq!(vertical_step(&mut aux), 0);
    }

    #[test]
    fn dummy_edge_never_merges_vertically() {
        let mut aux = aux_for("a(b)");
        assert_eq!(vertical_step(&mut aux), 0);
        assert_eq!(aux.edge_count(), 2);
    }

    #[test]
    fn second_merge_of_an_edge_is_refused() {
        let mut aux = aux_for("r(x,y,z)");
        assert_eq!(aux.merge_horizontal(1, 2), Some(E));
        assert_eq!(aux.merge_horizontal(2, 3), None);
        assert_eq!(aux.merge_horizontal(1, 3), None);
        // not neighbours
        let mut aux = aux_for("r(x,y,z)");
        assert_eq!(aux.merge_horizontal(1, 3), None);
    }
}
