//! Splitting a top DAG into a spanning tree of inner nodes plus references.
//!
//! A depth-first pass from the root, left before right, numbers inner nodes
//! in the order it first reaches them. The edge along which a node is first
//! reached is a core edge; every other child slot holds a reference: a label
//! id `< L` for a leaf, or `L + rank` for an inner node seen before.

use super::huffman::Bits;
use crate::error::DecodeError;
use crate::topdag::{DagNode, TopDag};
use crate::toptree::MergeType;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreDecomposition {
    /// Number of labels `L`.
    pub labels: u64,
    /// Two bits per inner node in rank order: is the left (right) child a
    /// core inner node.
    pub structure: Bits,
    /// Merge type per inner node in rank order.
    pub merge_types: Vec<MergeType>,
    /// Non-core child slots, by rank, left before right. A DAG that is a
    /// single leaf has one entry: that leaf's label.
    pub child_refs: Vec<u64>,
}

impl CoreDecomposition {
    pub fn inner_count(&self) -> usize {
        self.merge_types.len()
    }
}

/// Leaves must carry labels below `labels`.
pub fn core_decompose(dag: &TopDag, labels: u64) -> CoreDecomposition {
    let root = dag.root();
    let mut out = CoreDecomposition {
        labels,
        structure: Bits::new(),
        merge_types: Vec::new(),
        child_refs: Vec::new(),
    };
    if let DagNode::Leaf { label } = dag.node(root) {
        out.child_refs.push(label as u64);
        return out;
    }
    const UNSEEN: u32 = u32::MAX;
    let mut rank = vec![UNSEEN; dag.len()];
    // Per rank: the two slots, each either core or a reference.
    let mut slots: Vec<[Option<u64>; 2]> = Vec::new();

    enum Frame {
        Enter(u32),
        Slot { node: u32, side: usize },
    }
    let mut stack = vec![Frame::Enter(root)];
    while let Some(frame) = stack.pop() {
        match frame {
            Frame::Enter(id) => {
                let DagNode::Inner { kind, .. } = dag.node(id) else {
                    unreachable!("only inner nodes are entered")
                };
                rank[id as usize] = out.merge_types.len() as u32;
                out.merge_types.push(kind);
                slots.push([None, None]);
                stack.push(Frame::Slot { node: id, side: 1 });
                stack.push(Frame::Slot { node: id, side: 0 });
            }
            Frame::Slot { node, side } => {
                let DagNode::Inner { left, right, .. } = dag.node(node) else {
                    unreachable!()
                };
                let child = if side == 0 { left } else { right };
                let r = rank[node as usize] as usize;
                match dag.node(child) {
                    DagNode::Leaf { label } => {
                        debug_assert!((label as u64) < labels);
                        slots[r][side] = Some(label as u64);
                    }
                    DagNode::Inner { .. } if rank[child as usize] != UNSEEN => {
                        slots[r][side] = Some(labels + rank[child as usize] as u64);
                    }
                    DagNode::Inner { .. } => stack.push(Frame::Enter(child)),
                }
            }
        }
    }
    for pair in &slots {
        for slot in pair {
            out.structure.push(slot.is_none());
        }
        out.child_refs.extend(pair.iter().flatten());
    }
    out
}

/// Rebuilds a DAG from its decomposition. Identical subgraphs are merged
/// again, so the result is canonical even for inputs that repeat clusters.
pub fn recompose(core: &CoreDecomposition) -> Result<TopDag, DecodeError> {
    let labels = core.labels;
    let inner = core.merge_types.len();
    if labels > u32::MAX as u64 || labels as usize + inner > u32::MAX as usize {
        return Err(DecodeError::BadHeader("node count"));
    }
    let mut dag = TopDag::with_labels(labels as usize);
    if inner == 0 {
        if core.child_refs.len() != 1 || !core.structure.is_empty() {
            return Err(DecodeError::BadSegment {
                segment: "structure",
                reason: "single leaf needs exactly one reference",
            });
        }
        let leaf = core.child_refs[0];
        if leaf >= labels {
            return Err(DecodeError::ReferenceOutOfRange {
                reference: leaf,
                limit: labels,
            });
        }
        dag.set_root(leaf as u32).expect("leaf exists");
        return Ok(dag);
    }
    if core.structure.len() != 2 * inner {
        return Err(DecodeError::BadSegment {
            segment: "structure",
            reason: "wrong number of structure bits",
        });
    }

    #[derive(Clone, Copy)]
    enum Child {
        Core(u32),
        Ref(u64),
    }
    // Parse the pre-order shape of the core tree.
    let mut kids: Vec<[Child; 2]> = vec![[Child::Ref(0); 2]; inner];
    let bad_shape = DecodeError::BadSegment {
        segment: "structure",
        reason: "core tree shape does not match node count",
    };
    let mut next = 1usize;
    let mut pending: Vec<usize> = Vec::new();
    let mut cur = Some(0usize);
    loop {
        if let Some(r) = cur {
            pending.push(r);
            if core.structure[2 * r] {
                if next >= inner {
                    return Err(bad_shape);
                }
                kids[r][0] = Child::Core(next as u32);
                cur = Some(next);
                next += 1;
                continue;
            }
        }
        let Some(r) = pending.pop() else { break };
        cur = None;
        if core.structure[2 * r + 1] {
            if next >= inner {
                return Err(bad_shape);
            }
            kids[r][1] = Child::Core(next as u32);
            cur = Some(next);
            next += 1;
        }
    }
    if next != inner {
        return Err(bad_shape);
    }

    let limit = labels + inner as u64;
    let mut refs = core.child_refs.iter().copied();
    for (r, pair) in kids.iter_mut().enumerate() {
        for (side, slot) in pair.iter_mut().enumerate() {
            if core.structure[2 * r + side] {
                continue;
            }
            let v = refs.next().ok_or(DecodeError::BadSegment {
                segment: "references",
                reason: "too few references",
            })?;
            if v >= limit {
                return Err(DecodeError::ReferenceOutOfRange {
                    reference: v,
                    limit,
                });
            }
            *slot = Child::Ref(v);
        }
    }
    if refs.next().is_some() {
        return Err(DecodeError::BadSegment {
            segment: "references",
            reason: "too many references",
        });
    }

    // Intern children first; back references may point anywhere, so walk
    // with cycle detection.
    const WHITE: u8 = 0;
    const GREY: u8 = 1;
    const BLACK: u8 = 2;
    let mut color = vec![WHITE; inner];
    let mut id_of = vec![0u32; inner];
    let target = |c: Child| -> Result<u32, u64> {
        match c {
            Child::Core(r) => Ok(r),
            Child::Ref(v) if v >= labels => Ok((v - labels) as u32),
            Child::Ref(v) => Err(v),
        }
    };
    let mut stack: Vec<(u32, bool)> = vec![(0, false)];
    while let Some((r, done)) = stack.pop() {
        let ri = r as usize;
        if done {
            let resolve = |c: Child| match target(c) {
                Ok(t) => id_of[t as usize],
                Err(label) => label as u32,
            };
            let (l, rt) = (resolve(kids[ri][0]), resolve(kids[ri][1]));
            id_of[ri] = dag
                .intern_inner(core.merge_types[ri], l, rt)
                .expect("children interned first");
            color[ri] = BLACK;
            continue;
        }
        match color[ri] {
            BLACK => continue,
            GREY => return Err(DecodeError::Cyclic),
            _ => {}
        }
        color[ri] = GREY;
        stack.push((r, true));
        for side in [1, 0] {
            if let Ok(t) = target(kids[ri][side]) {
                match color[t as usize] {
                    GREY => return Err(DecodeError::Cyclic),
                    WHITE => stack.push((t, false)),
                    _ => {}
                }
            }
        }
    }
    dag.set_root(id_of[0]).expect("root interned");
    Ok(dag)
}
