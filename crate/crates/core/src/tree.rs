//! Ordered labelled trees with pre-order node numbering.
//!
//! A [`LabelledTree`] is immutable once built. Nodes are numbered `0..len` in
//! pre-order, the root is node 0 and every child has a larger id than its
//! parent. Labels are indices into a [`LabelTable`] of distinct byte strings.

use std::fmt;

use rustc_hash::FxHashMap;

use crate::error::TreeError;

/// Sentinel parent of the root.
pub const NO_PARENT: u32 = u32::MAX;

/// Distinct label strings, numbered in insertion order.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct LabelTable {
    labels: Vec<Vec<u8>>,
    index: FxHashMap<Vec<u8>, u32>,
}

impl LabelTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a table from an ordered list of labels, rejecting duplicates and
    /// labels containing a zero byte.
    pub fn from_labels<I, L>(labels: I) -> Result<Self, TreeError>
    where
        I: IntoIterator<Item = L>,
        L: AsRef<[u8]>,
    {
        let mut table = Self::new();
        for label in labels {
            let label = label.as_ref();
            if table.index.contains_key(label) {
                return Err(TreeError::DuplicateLabel(label.to_vec()));
            }
            table.intern(label)?;
        }
        Ok(table)
    }

    /// Returns the id of `label`, adding it if it is new.
    pub fn intern(&mut self, label: &[u8]) -> Result<u32, TreeError> {
        if let Some(&id) = self.index.get(label) {
            return Ok(id);
        }
        if label.contains(&0) {
            return Err(TreeError::ZeroByteInLabel(label.to_vec()));
        }
        let id = u32::try_from(self.labels.len()).map_err(|_| TreeError::TooLarge)?;
        self.labels.push(label.to_vec());
        self.index.insert(label.to_vec(), id);
        Ok(id)
    }

    pub fn id_of(&self, label: &[u8]) -> Option<u32> {
        self.index.get(label).copied()
    }

    pub fn get(&self, id: u32) -> Option<&[u8]> {
        self.labels.get(id as usize).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> {
        self.labels.iter().map(Vec::as_slice)
    }

    /// Total bytes over all labels, excluding separators.
    pub fn byte_len(&self) -> usize {
        self.labels.iter().map(Vec::len).sum()
    }

    /// Labels joined into one string, each followed by a zero byte.
    pub fn to_zero_separated(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_len() + self.len());
        for label in &self.labels {
            out.extend_from_slice(label);
            out.push(0);
        }
        out
    }
}

impl fmt::Debug for LabelTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.labels.iter().map(|l| String::from_utf8_lossy(l)))
            .finish()
    }
}

/// One token of a pre-order open/close traversal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeEvent {
    Open(Vec<u8>),
    Close,
}

/// Basic shape statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeStats {
    pub nodes: usize,
    /// Nodes on the longest root-to-leaf path; a single node has height 1.
    pub height: usize,
    pub distinct_labels: usize,
}

/// An ordered rooted tree whose nodes carry label ids.
#[derive(Clone, PartialEq, Eq)]
pub struct LabelledTree {
    table: LabelTable,
    label: Vec<u32>,
    parent: Vec<u32>,
    // CSR child lists, derived from `parent`.
    child_start: Vec<u32>,
    child_list: Vec<u32>,
}

impl LabelledTree {
    /// Builds a tree from per-node labels and parents given in pre-order.
    pub fn from_parts(
        table: LabelTable,
        label: Vec<u32>,
        parent: Vec<u32>,
    ) -> Result<Self, TreeError> {
        if label.is_empty() {
            return Err(TreeError::Empty);
        }
        if label.len() != parent.len() {
            return Err(TreeError::NotPreorder(0));
        }
        if label.len() >= NO_PARENT as usize {
            return Err(TreeError::TooLarge);
        }
        if parent[0] != NO_PARENT {
            return Err(TreeError::NotPreorder(0));
        }
        // In pre-order the parent of v is v-1 or one of its ancestors.
        let mut path: Vec<u32> = vec![0];
        for (v, &p) in parent.iter().enumerate().skip(1) {
            while let Some(&top) = path.last() {
                if top == p {
                    break;
                }
                path.pop();
            }
            if path.is_empty() {
                return Err(TreeError::NotPreorder(v));
            }
            path.push(v as u32);
        }
        if let Some(&bad) = label.iter().find(|&&l| l as usize >= table.len()) {
            return Err(TreeError::UnknownLabel(bad));
        }
        let mut child_start = vec![0u32; label.len() + 1];
        for &p in &parent[1..] {
            child_start[p as usize + 1] += 1;
        }
        for i in 1..child_start.len() {
            child_start[i] += child_start[i - 1];
        }
        // Ids increase in pre-order, so appending in id order keeps sibling order.
        let mut fill = child_start.clone();
        let mut child_list = vec![0u32; label.len() - 1];
        for (v, &p) in parent.iter().enumerate().skip(1) {
            child_list[fill[p as usize] as usize] = v as u32;
            fill[p as usize] += 1;
        }
        Ok(Self {
            table,
            label,
            parent,
            child_start,
            child_list,
        })
    }

    pub fn len(&self) -> usize {
        self.label.len()
    }

    /// Always false; a tree has at least its root.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn root(&self) -> u32 {
        0
    }

    pub fn labels(&self) -> &LabelTable {
        &self.table
    }

    pub fn label(&self, node: u32) -> u32 {
        self.label[node as usize]
    }

    pub fn label_bytes(&self, node: u32) -> &[u8] {
        self.table.get(self.label(node)).unwrap_or_default()
    }

    pub fn node_labels(&self) -> &[u32] {
        &self.label
    }

    pub fn parent(&self, node: u32) -> Option<u32> {
        match self.parent[node as usize] {
            NO_PARENT => None,
            p => Some(p),
        }
    }

    pub fn parents(&self) -> &[u32] {
        &self.parent
    }

    pub fn children(&self, node: u32) -> &[u32] {
        let lo = self.child_start[node as usize] as usize;
        let hi = self.child_start[node as usize + 1] as usize;
        &self.child_list[lo..hi]
    }

    pub fn edge_count(&self) -> usize {
        self.len() - 1
    }

    pub fn stats(&self) -> TreeStats {
        let mut depth = vec![0u32; self.len()];
        let mut height = 0;
        for v in 0..self.len() {
            let d = match self.parent[v] {
                NO_PARENT => 1,
                p => depth[p as usize] + 1,
            };
            depth[v] = d;
            height = height.max(d);
        }
        TreeStats {
            nodes: self.len(),
            height: height as usize,
            distinct_labels: self.table.len(),
        }
    }

    /// Size of the succinct baseline encoding: balanced parentheses, one
    /// fixed-width label index per node and the zero-separated label string.
    pub fn succinct_size_bits(&self) -> u64 {
        let n = self.len() as u64;
        let l = self.table.len() as u64;
        let width = index_width(l);
        2 * n + n * width + 8 * (self.table.byte_len() as u64 + l)
    }

    pub fn preorder_events(&self) -> Vec<TreeEvent> {
        let mut events = Vec::with_capacity(2 * self.len());
        self.walk_events(|ev| events.push(ev));
        events
    }

    fn walk_events(&self, mut emit: impl FnMut(TreeEvent)) {
        let mut open: Vec<u32> = Vec::new();
        for v in 0..self.len() as u32 {
            let p = self.parent[v as usize];
            while let Some(&top) = open.last() {
                if top == p {
                    break;
                }
                open.pop();
                emit(TreeEvent::Close);
            }
            emit(TreeEvent::Open(self.label_bytes(v).to_vec()));
            open.push(v);
        }
        for _ in open {
            emit(TreeEvent::Close);
        }
    }

    /// Nested empty-tag XML for the tree structure.
    pub fn to_xml(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let mut open: Vec<u32> = Vec::new();
        let close = |out: &mut Vec<u8>, v: u32| {
            out.extend_from_slice(b"</");
            out.extend_from_slice(self.label_bytes(v));
            out.push(b'>');
        };
        for v in 0..self.len() as u32 {
            let p = self.parent[v as usize];
            while let Some(&top) = open.last() {
                if top == p {
                    break;
                }
                open.pop();
                close(&mut out, top);
            }
            out.push(b'<');
            out.extend_from_slice(self.label_bytes(v));
            if self.children(v).is_empty() {
                out.extend_from_slice(b"/>");
            } else {
                out.push(b'>');
                open.push(v);
            }
        }
        while let Some(v) = open.pop() {
            close(&mut out, v);
        }
        out
    }
}

impl fmt::Debug for LabelledTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len() > 64 {
            return write!(f, "LabelledTree({} nodes)", self.len());
        }
        let mut s = String::new();
        let mut need_comma = false;
        self.walk_events(|ev| match ev {
            TreeEvent::Open(l) => {
                if need_comma {
                    s.push(',');
                }
                s.push_str(&String::from_utf8_lossy(&l));
                s.push('(');
                need_comma = false;
            }
            TreeEvent::Close => {
                if s.ends_with('(') {
                    s.pop();
                } else {
                    s.push(')');
                }
                need_comma = true;
            }
        });
        f.write_str(&s)
    }
}

/// Bits per label index in the baseline; a single label still costs one bit.
pub fn index_width(labels: u64) -> u64 {
    if labels <= 2 {
        1
    } else {
        64 - (labels - 1).leading_zeros() as u64
    }
}

/// Incremental builder fed with open/close events.
#[derive(Default)]
pub struct TreeBuilder {
    table: LabelTable,
    label: Vec<u32>,
    parent: Vec<u32>,
    open: Vec<u32>,
    closed_root: bool,
}

impl TreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn open(&mut self, label: &[u8]) -> Result<(), TreeError> {
        if self.closed_root {
            return Err(TreeError::MultipleRoots);
        }
        let id = self.table.intern(label)?;
        if self.label.len() >= (NO_PARENT - 1) as usize {
            return Err(TreeError::TooLarge);
        }
        let v = self.label.len() as u32;
        self.label.push(id);
        self.parent
            .push(self.open.last().copied().unwrap_or(NO_PARENT));
        self.open.push(v);
        Ok(())
    }

    pub fn close(&mut self) -> Result<(), TreeError> {
        self.open.pop().ok_or(TreeError::Unbalanced)?;
        if self.open.is_empty() {
            self.closed_root = true;
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.open.len()
    }

    pub fn finish(self) -> Result<LabelledTree, TreeError> {
        if self.label.is_empty() {
            return Err(TreeError::Empty);
        }
        if !self.open.is_empty() {
            return Err(TreeError::Unbalanced);
        }
        LabelledTree::from_parts(self.table, self.label, self.parent)
    }
}

/// Builds a tree from a balanced open/close sequence with a single root.
pub fn build_tree<I>(events: I) -> Result<LabelledTree, TreeError>
where
    I: IntoIterator<Item = TreeEvent>,
{
    let mut builder = TreeBuilder::new();
    for ev in events {
        match ev {
            TreeEvent::Open(label) => builder.open(&label)?,
            TreeEvent::Close => builder.close()?,
        }
    }
    builder.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open(l: &str) -> TreeEvent {
        TreeEvent::Open(l.as_bytes().to_vec())
    }

    fn abc() -> LabelledTree {
        build_tree([
            open("a"),
            open("b"),
            TreeEvent::Close,
            open("c"),
            TreeEvent::Close,
            TreeEvent::Close,
        ])
        .unwrap()
    }

    #[test]
    fn builds_three_node_tree() {
        let t = abc();
        assert_eq!(t.len(), 3);
        assert_eq!(t.children(0), &[1, 2]);
        assert_eq!(t.label_bytes(1), b"b");
        assert_eq!(t.parent(2), Some(0));
        assert_eq!(t.parent(0), None);
        assert_eq!(format!("{t:?}"), "a(b,c)");
    }

    #[test]
    fn single_node() {
        let t = build_tree([open("a"), TreeEvent::Close]).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.children(0).is_empty());
        assert_eq!(t.preorder_events(), vec![open("a"), TreeEvent::Close]);
    }

    #[test]
    fn events_of_three_node_tree() {
        assert_eq!(
            abc().preorder_events(),
            vec![
                open("a"),
                open("b"),
                TreeEvent::Close,
                open("c"),
                TreeEvent::Close,
                TreeEvent::Close
            ]
        );
    }

    #[test]
    fn rejects_bad_sequences() {
        assert_eq!(build_tree([]), Err(TreeError::Empty));
        assert_eq!(build_tree([open("a")]), Err(TreeError::Unbalanced));
        assert_eq!(
            build_tree([open("a"), TreeEvent::Close, TreeEvent::Close]),
            Err(TreeError::Unbalanced)
        );
        assert_eq!(
            build_tree([open("a"), TreeEvent::Close, open("b"), TreeEvent::Close]),
            Err(TreeError::MultipleRoots)
        );
        assert!(matches!(
            build_tree([TreeEvent::Open(vec![b'x', 0]), TreeEvent::Close]),
            Err(TreeError::ZeroByteInLabel(_))
        ));
    }

    #[test]
    fn stats() {
        assert_eq!(
            abc().stats(),
            TreeStats {
                nodes: 3,
                height: 2,
                distinct_labels: 3
            }
        );
        let chain: Vec<_> = ["a", "b", "a", "c", "a"]
            .iter()
            .map(|l| open(l))
            .chain(std::iter::repeat_n(TreeEvent::Close, 5))
            .collect();
        let s = build_tree(chain).unwrap().stats();
        assert_eq!((s.nodes, s.height), (5, 5));
        assert!(s.distinct_labels <= 5);
    }

    #[test]
    fn succinct_baseline() {
        let t = build_tree([open("a"), TreeEvent::Close]).unwrap();
        assert_eq!(t.succinct_size_bits(), 19);
        assert_eq!(abc().succinct_size_bits(), 60);
    }

    #[test]
    fn index_widths() {
        assert_eq!(index_width(1), 1);
        assert_eq!(index_width(2), 1);
        assert_eq!(index_width(3), 2);
        assert_eq!(index_width(4), 2);
        assert_eq!(index_width(5), 3);
        assert_eq!(index_width(256), 8);
        assert_eq!(index_width(257), 9);
    }

    #[test]
    fn from_parts_rejects_non_preorder() {
        let table = LabelTable::from_labels(["a"]).unwrap();
        // a(b(c)) is fine; a(b, c) with d claiming b as parent is not.
        assert!(LabelledTree::from_parts(table.clone(), vec![0; 3], vec![NO_PARENT, 0, 1]).is_ok());
        assert!(
            LabelledTree::from_parts(table.clone(), vec![0; 4], vec![NO_PARENT, 0, 0, 1]).is_err()
        );
        assert!(LabelledTree::from_parts(table, vec![0, 1], vec![NO_PARENT, 0]).is_err());
    }

    #[test]
    fn label_table_rules() {
        assert!(LabelTable::from_labels(["a", "a"]).is_err());
        let t = LabelTable::from_labels(["x", "yz"]).unwrap();
        assert_eq!(t.id_of(b"yz"), Some(1));
        assert_eq!(t.to_zero_separated(), b"x\0yz\0");
    }

    #[test]
    fn xml_of_tree() {
        assert_eq!(abc().to_xml(), b"<a><b/><c/></a>");
    }
}
