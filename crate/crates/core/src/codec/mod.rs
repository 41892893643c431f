//! Compact binary encoding of a top DAG and its labels.
//!
//! Layout, integers little-endian:
//!
//! ```text
//! "TTC1"  u32 version  u64 tree nodes  u64 labels  u64 inner nodes
//! u64 label bytes  u64 bits x 4 (structure, merge types, references, labels)
//! payload: the four Huffman-coded segments back to back, MSB first,
//!          zero-padded to a whole byte
//! ```
//!
//! The structure segment codes the core tree's bits in 8-bit blocks, the
//! merge types use 3-bit symbols, references use the smallest width holding
//! `L + I - 1`, and the label segment codes the label bytes, each label
//! followed by a zero byte.

mod core;
pub mod huffman;

use bitvec::prelude::*;

pub use self::core::{core_decompose, recompose, CoreDecomposition};
use self::huffman::{decode_segment, encode_segment, Bits, SegmentError};
use crate::error::DecodeError;
use crate::topdag::TopDag;
use crate::toptree::MergeType;
use crate::tree::{index_width, LabelTable};

pub const MAGIC: &[u8; 4] = b"TTC1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 72;

const SEGMENTS: [&str; 4] = ["structure", "merge types", "references", "labels"];

fn ref_width(labels: u64, inner: u64) -> u32 {
    index_width(labels + inner) as u32
}

/// Encodes `dag` with the label strings of `labels`. Leaf labels of the DAG
/// must be ids into `labels`, and the DAG must have a root.
pub fn encode_file(dag: &TopDag, labels: &LabelTable) -> Vec<u8> {
    let l = labels.len() as u64;
    let core = core_decompose(dag, l);
    let inner = core.inner_count() as u64;

    let blocks: Vec<u64> = core
        .structure
        .chunks(8)
        .map(|c| {
            let mut v = 0u64;
            for (i, b) in c.iter().enumerate() {
                v |= (*b as u64) << (7 - i);
            }
            v
        })
        .collect();
    let kinds: Vec<u64> = core.merge_types.iter().map(|&k| k as u64).collect();
    let label_string = labels.to_zero_separated();
    let label_syms: Vec<u64> = label_string.iter().map(|&b| b as u64).collect();

    let mut payload = Bits::new();
    let seg_bits = [
        encode_segment(&blocks, 8, &mut payload),
        encode_segment(&kinds, 3, &mut payload),
        encode_segment(&core.child_refs, ref_width(l, inner), &mut payload),
        encode_segment(&label_syms, 8, &mut payload),
    ];

    let mut out = Vec::with_capacity(HEADER_LEN + payload.len().div_ceil(8));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in [dag.tree_size(), l, inner, labels.byte_len() as u64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in seg_bits {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(payload.as_raw_slice());
    out
}

fn u64_at(data: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(data[at..at + 8].try_into().expect("8 bytes"))
}

fn segment_error(segment: &'static str, declared: u64, e: SegmentError) -> DecodeError {
    match e {
        SegmentError::Exhausted => DecodeError::BadSegment {
            segment,
            reason: "ran past the end of the segment",
        },
        SegmentError::Shape => DecodeError::BadSegment {
            segment,
            reason: "segment length does not match symbol count",
        },
        SegmentError::Trailing(left) => DecodeError::SegmentLength {
            segment,
            declared,
            used: declared - left,
        },
    }
}

/// Parses a file written by [`encode_file`]. Any input yields either a
/// valid DAG with its label table or an error.
pub fn decode_file(data: &[u8]) -> Result<(TopDag, LabelTable), DecodeError> {
    if data.len() < 4 {
        return Err(DecodeError::Truncated);
    }
    if &data[..4] != MAGIC {
        return Err(DecodeError::BadMagic);
    }
    if data.len() < HEADER_LEN {
        return Err(DecodeError::Truncated);
    }
    let version = u32::from_le_bytes(data[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(DecodeError::UnsupportedVersion(version));
    }
    let tree_nodes = u64_at(data, 8);
    let l = u64_at(data, 16);
    let inner = u64_at(data, 24);
    let label_bytes = u64_at(data, 32);
    let seg: Vec<u64> = (0..4).map(|i| u64_at(data, 40 + 8 * i)).collect();

    let total_bits = seg
        .iter()
        .try_fold(0u64, |a, &b| a.checked_add(b))
        .ok_or(DecodeError::BadHeader("segment lengths"))?;
    let actual = (data.len() - HEADER_LEN) as u64;
    let expected = total_bits.div_ceil(8);
    if expected != actual {
        return Err(DecodeError::PayloadLength { expected, actual });
    }
    if l == 0 {
        return Err(DecodeError::BadHeader("labels"));
    }
    if tree_nodes == 0 {
        return Err(DecodeError::BadHeader("tree nodes"));
    }
    if l.checked_add(label_bytes).is_none_or(|n| n > seg[3]) {
        return Err(DecodeError::BadHeader("label bytes"));
    }
    if inner > seg[1] || inner.saturating_mul(2) > seg[0].saturating_mul(8) {
        return Err(DecodeError::BadHeader("inner nodes"));
    }
    if l.saturating_add(inner) > u32::MAX as u64 {
        return Err(DecodeError::BadHeader("node count"));
    }

    let bits = data[HEADER_LEN..].view_bits::<Msb0>();
    let mut start = 0usize;
    let mut take = |i: usize| {
        let s = &bits[start..start + seg[i] as usize];
        start += seg[i] as usize;
        s
    };
    let (s0, s1, s2, s3) = (take(0), take(1), take(2), take(3));

    let blocks = decode_segment(s0, (2 * inner).div_ceil(8), 8)
        .map_err(|e| segment_error(SEGMENTS[0], seg[0], e))?;
    let mut structure = Bits::with_capacity(2 * inner as usize);
    for b in blocks {
        for i in 0..8 {
            if structure.len() < 2 * inner as usize {
                structure.push(b >> (7 - i) & 1 == 1);
            }
        }
    }
    let merge_types = decode_segment(s1, inner, 3)
        .map_err(|e| segment_error(SEGMENTS[1], seg[1], e))?
        .into_iter()
        .map(|v| {
            MergeType::from_u8(v as u8).ok_or(DecodeError::BadSegment {
                segment: SEGMENTS[1],
                reason: "unknown merge type",
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let child_refs = decode_segment(s2, inner + 1, ref_width(l, inner))
        .map_err(|e| segment_error(SEGMENTS[2], seg[2], e))?;
    let label_string: Vec<u8> = decode_segment(s3, l + label_bytes, 8)
        .map_err(|e| segment_error(SEGMENTS[3], seg[3], e))?
        .into_iter()
        .map(|v| v as u8)
        .collect();

    let labels = parse_labels(&label_string, l)?;
    let dag = recompose(&CoreDecomposition {
        labels: l,
        structure,
        merge_types,
        child_refs,
    })?;
    dag.validate().map_err(|_| DecodeError::InconsistentMerge)?;
    let size = dag.tree_size();
    if size != tree_nodes {
        return Err(DecodeError::TreeSize {
            expected: tree_nodes,
            actual: size,
        });
    }
    Ok((dag, labels))
}

fn parse_labels(string: &[u8], count: u64) -> Result<LabelTable, DecodeError> {
    let zeros = string.iter().filter(|&&b| b == 0).count() as u64;
    if zeros != count || string.last() != Some(&0) {
        return Err(DecodeError::BadSegment {
            segment: SEGMENTS[3],
            reason: "label count does not match terminators",
        });
    }
    LabelTable::from_labels(string[..string.len() - 1].split(|&b| b == 0))
        .map_err(DecodeError::Labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("label index {index} out of range ({count} labels)")]
pub struct LabelIndexError {
    pub index: usize,
    pub count: usize,
}

/// The `i`-th label of a zero-separated label string: the bytes after the
/// `i`-th zero byte (or from the start for `i = 0`) up to the next zero byte
/// or the end.
pub fn select0_label(string: &[u8], i: usize) -> Result<&[u8], LabelIndexError> {
    let zeros = string.iter().filter(|&&b| b == 0).count();
    let count = zeros + usize::from(string.last().is_some_and(|&b| b != 0));
    if i >= count {
        return Err(LabelIndexError { index: i, count });
    }
    string
        .split(|&b| b == 0)
        .nth(i)
        .ok_or(LabelIndexError { index: i, count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{build_tree, TreeEvent};
    use crate::{compress, BuildOptions, Combiner};

    fn tree_of(s: &str) -> crate::LabelledTree {
        // "a(b,c(d))"
        let mut ev = Vec::new();
        let mut label = String::new();
        for ch in s.chars() {
            match ch {
                '(' | ',' | ')' => {
                    if !label.is_empty() {
                        ev.push(TreeEvent::Open(std::mem::take(&mut label).into_bytes()));
                        if ch != '(' {
                            ev.push(TreeEvent::Close);
                        }
                    } else if ch != '(' {
                        ev.push(TreeEvent::Close);
                    }
                }
                c => label.push(c),
            }
        }
        if !label.is_empty() {
            ev.push(TreeEvent::Open(label.into_bytes()));
        }
        ev.push(TreeEvent::Close);
        build_tree(ev).unwrap()
    }

    fn round_trip(s: &str) {
        let t = tree_of(s);
        let (_, dag) = compress(&t, Combiner::Classic, &BuildOptions::default());
        let bytes = encode_file(&dag, t.labels());
        let (d2, l2) = decode_file(&bytes).unwrap();
        assert!(dag.structurally_eq(&d2), "{s}");
        assert_eq!(&l2, t.labels());
        assert_eq!(encode_file(&d2, &l2), bytes);
        assert_eq!(crate::decompress(&d2, &l2).unwrap(), t);
    }

    #[test]
    fn tree_parser_helper() {
        assert_eq!(format!("{:?}", tree_of("a(b,c(d))")), "a(b,c(d))");
        assert_eq!(format!("{:?}", tree_of("a")), "a");
    }

    #[test]
    fn round_trips() {
        for s in [
            "a",
            "a(b)",
            "a(b,c)",
            "a(b,b,b,b)",
            "a(b(c(d(e))))",
            "f(a(b,c),a(b,c),a(b,c))",
        ] {
            round_trip(s);
        }
    }

    #[test]
    fn shared_subtree_uses_back_reference() {
        let t = tree_of("r(x(y,y),x(y,y))");
        let (_, dag) = compress(&t, Combiner::Classic, &BuildOptions::default());
        let core = core_decompose(&dag, t.labels().len() as u64);
        assert_eq!(core.child_refs.len(), core.inner_count() + 1);
        assert!(core.child_refs.iter().any(|&r| r >= 3));
        assert_eq!(core.structure.count_ones(), core.inner_count() - 1);
    }

    #[test]
    fn single_leaf_core() {
        let t = tree_of("q");
        let (_, dag) = compress(&t, Combiner::Classic, &BuildOptions::default());
        let core = core_decompose(&dag, 1);
        assert!(core.structure.is_empty());
        assert_eq!(core.child_refs, vec![0]);
        assert!(recompose(&core).unwrap().structurally_eq(&dag));
    }

    #[test]
    fn cycle_detected() {
        // rank 0 -> core rank 1, rank 1 refers back to rank 0
        let core = CoreDecomposition {
            labels: 1,
            structure: bitvec![u8, Msb0; 1, 0, 0, 0],
            merge_types: vec![MergeType::A, MergeType::A],
            child_refs: vec![0, 0, 1],
        };
        assert_eq!(recompose(&core).unwrap_err(), DecodeError::Cyclic);
    }

    #[test]
    fn header_errors() {
        let t = tree_of("a(b,c)");
        let (_, dag) = compress(&t, Combiner::Classic, &BuildOptions::default());
        let bytes = encode_file(&dag, t.labels());
        assert_eq!(&bytes[..4], MAGIC);
        assert_eq!(u64_at(&bytes, 8), 3);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(decode_file(&bad).unwrap_err(), DecodeError::BadMagic);
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert_eq!(
            decode_file(&bad).unwrap_err(),
            DecodeError::UnsupportedVersion(2)
        );
        assert_eq!(
            decode_file(&bytes[..40]).unwrap_err(),
            DecodeError::Truncated
        );
        assert_eq!(decode_file(b"TT").unwrap_err(), DecodeError::Truncated);
        let mut bad = bytes.clone();
        bad.push(0);
        assert!(matches!(
            decode_file(&bad).unwrap_err(),
            DecodeError::PayloadLength { .. }
        ));
        let mut bad = bytes.clone();
        bad[8] = 4;
        assert_eq!(
            decode_file(&bad).unwrap_err(),
            DecodeError::TreeSize {
                expected: 4,
                actual: 3
            }
        );
    }

    #[test]
    fn every_truncation_fails_cleanly() {
        let t = tree_of("a(b(c,d),b(c,d),e(f))");
        let (_, dag) = compress(&t, Combiner::Classic, &BuildOptions::default());
        let bytes = encode_file(&dag, t.labels());
        for cut in 0..bytes.len() {
            assert!(decode_file(&bytes[..cut]).is_err());
        }
        for i in HEADER_LEN..bytes.len() {
            for bit in 0..8 {
                let mut b = bytes.clone();
                b[i] ^= 1 << bit;
                if let Ok((d, l)) = decode_file(&b) {
                    let again = encode_file(&d, &l);
                    let (d2, l2) = decode_file(&again).unwrap();
                    assert!(d.structurally_eq(&d2));
                    assert_eq!(l, l2);
                    crate::decompress(&d, &l).unwrap();
                }
            }
        }
    }

    #[test]
    fn select0() {
        let s = b"ab\0c\0\0d\0";
        assert_eq!(select0_label(s, 0).unwrap(), b"ab");
        assert_eq!(select0_label(s, 1).unwrap(), b"c");
        assert_eq!(select0_label(s, 2).unwrap(), b"");
        assert_eq!(select0_label(s, 3).unwrap(), b"d");
        assert_eq!(
            select0_label(s, 4),
            Err(LabelIndexError { index: 4, count: 4 })
        );
        assert_eq!(select0_label(b"x\0yz", 1).unwrap(), b"yz");
        assert!(select0_label(b"", 0).is_err());
    }
}
