//! RePair-style horizontal combiner.
//!
//! Every cluster gets a 64-bit hash built from its label or merge type and
//! its children's hashes. A digram is a pair of neighbouring sibling edges
//! that could be merged horizontally, keyed by the two cluster hashes and the
//! merge type. Digrams are merged most frequent first, skipping occurrences
//! that overlap an earlier merge in the same iteration.

use std::cmp::Reverse;

use rustc_hash::FxHashMap;

use crate::toptree::{AuxTree, HorizontalCombiner, MergeType};

const LEAF_TAG: u64 = 0x6c65_6166;

fn mix(mut z: u64) -> u64 {
    // splitmix64 finaliser
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded structural hash of clusters.
#[derive(Clone, Copy, Debug)]
pub struct ClusterHasher {
    seed: u64,
}

impl ClusterHasher {
    pub fn new(seed: u64) -> Self {
        Self { seed: mix(seed) }
    }

    pub fn leaf(&self, label: u32) -> u64 {
        mix(mix(self.seed ^ LEAF_TAG) ^ label as u64)
    }

    pub fn inner(&self, kind: MergeType, left: u64, right: u64) -> u64 {
        let h = mix(self.seed.wrapping_add(kind as u64 + 1));
        let h = mix(h ^ left);
        mix(h.rotate_left(23) ^ right)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digram {
    pub left: u64,
    pub right: u64,
    pub kind: MergeType,
    /// Neighbouring edge pairs `(left, right)` in document order.
    pub occurrences: Vec<(u32, u32)>,
}

impl Digram {
    pub fn count(&self) -> usize {
        self.occurrences.len()
    }
}

/// Every mergeable neighbouring pair, grouped by digram. Ordered by count
/// (descending), then hash pair, then first occurrence.
pub fn collect_digrams(aux: &AuxTree) -> Vec<Digram> {
    let mut table: FxHashMap<(u64, u64, MergeType), usize> = FxHashMap::default();
    let mut digrams: Vec<Digram> = Vec::new();
    for p in aux.parents() {
        let ch = aux.children(p);
        for w in ch.windows(2) {
            let (l, r) = (w[0], w[1]);
            let Some(kind) = aux.horizontal_kind(l, r) else {
                continue;
            };
            let key = (aux.hash(l), aux.hash(r), kind);
            let idx = *table.entry(key).or_insert_with(|| {
                digrams.push(Digram {
                    left: key.0,
                    right: key.1,
                    kind,
                    occurrences: Vec::new(),
                });
                digrams.len() - 1
            });
            digrams[idx].occurrences.push((l, r));
        }
    }
    // Creation order is first-occurrence order, so a stable sort keeps it as
    // the final tie-breaker.
    digrams.sort_by_key(|d| (Reverse(d.count()), d.left, d.right, d.kind));
    digrams
}

/// Merges every repeated digram (two or more occurrences), most frequent
/// first. Returns the number of merges.
pub fn repair_horizontal_step(aux: &mut AuxTree) -> usize {
    let digrams = collect_digrams(aux);
    let mut merges = 0;
    for d in digrams.iter().take_while(|d| d.count() >= 2) {
        for &(l, r) in &d.occurrences {
            if aux.merge_horizontal(l, r).is_some() {
                merges += 1;
            }
        }
    }
    merges
}

/// Horizontal combiner prioritising repeated digrams.
#[derive(Clone, Copy, Debug, Default)]
pub struct RePairCombiner;

impl HorizontalCombiner for RePairCombiner {
    fn horizontal_step(&mut self, aux: &mut AuxTree) -> usize {
        repair_horizontal_step(aux)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{build_tree, LabelledTree, TreeEvent};

    fn star(root: &str, kids: &[&str]) -> LabelledTree {
        let mut ev = vec![TreeEvent::Open(root.as_bytes().to_vec())];
        for k in kids {
            ev.push(TreeEvent::Open(k.as_bytes().to_vec()));
            ev.push(TreeEvent::Close);
        }
        ev.push(TreeEvent::Close);
        build_tree(ev).unwrap()
    }

    fn fresh(t: &LabelledTree) -> AuxTree {
        let mut aux = AuxTree::new(t, 7);
        aux.start_iteration();
        aux
    }

    #[test]
    fn leaf_hash_is_deterministic() {
        let h = ClusterHasher::new(1);
        assert_eq!(h.leaf(0), ClusterHasher::new(1).leaf(0));
        assert_ne!(h.leaf(0), h.leaf(1));
        assert_ne!(h.leaf(0), ClusterHasher::new(2).leaf(0));
        assert_ne!(
            h.inner(MergeType::E, h.leaf(0), h.leaf(1)),
            h.inner(MergeType::E, h.leaf(1), h.leaf(0))
        );
    }

    #[test]
    fn triple_counts_twice() {
        let t = star("r", &["x", "x", "x"]);
        let d = collect_digrams(&fresh(&t));
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].count(), 2);
        assert_eq!(d[0].kind, MergeType::E);
    }

    #[test]
    fn pair_counts_once() {
        let t = star("r", &["x", "y"]);
        let d = collect_digrams(&fresh(&t));
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].count(), 1);
    }

    #[test]
    fn no_siblings_no_digrams() {
        let t = build_tree(
            ["a", "b", "c"]
                .iter()
                .map(|l| TreeEvent::Open(l.as_bytes().to_vec()))
                .chain(std::iter::repeat_n(TreeEvent::Close, 3)),
        )
        .unwrap();
        assert!(collect_digrams(&fresh(&t)).is_empty());
    }

    #[test]
    fn overlapping_occurrences_skipped() {
        let t = star("r", &["x", "x", "x", "x"]);
        let mut aux = fresh(&t);
        assert_eq!(repair_horizontal_step(&mut aux), 2);
        assert_eq!(aux.edge_count(), 3);
    }

    #[test]
    fn alternating_pairs_merge() {
        let t = star("r", &["x", "y", "x", "y"]);
        let mut aux = fresh(&t);
        let d = collect_digrams(&aux);
        assert_eq!(d[0].count(), 2);
        assert_eq!(repair_horizontal_step(&mut aux), 2);
        assert_eq!(aux.hash(1), aux.hash(3));
    }

    #[test]
    fn lone_child_no_merge() {
        let t = star("r", &["x"]);
        let mut aux = fresh(&t);
        assert_eq!(repair_horizontal_step(&mut aux), 0);
    }
}
