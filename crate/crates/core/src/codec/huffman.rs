//! Canonical Huffman codes over `u64` symbols, with a self-describing tree.
//!
//! A coded segment is: the code tree shape in pre-order (two bits per inner
//! node, one per child, set when the child is itself inner), then each leaf's
//! symbol in pre-order as a fixed-width integer, then the codewords. A lone
//! symbol gets the one-bit code `0`; its tree is an inner root with the
//! symbol on both sides.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use bitvec::prelude::*;
use rustc_hash::FxHashMap;

pub type Bits = BitVec<u8, Msb0>;
pub type BitStr = BitSlice<u8, Msb0>;

/// Huffman code lengths for symbols with the given counts. Ties in the
/// merge order are broken by the smallest symbol in each subtree, so the
/// result is deterministic. Output is sorted by symbol.
pub fn code_lengths(freqs: &[(u64, u64)]) -> Vec<(u64, u32)> {
    let mut syms: Vec<(u64, u64)> = freqs.to_vec();
    syms.sort_unstable();
    match syms.len() {
        0 => return Vec::new(),
        1 => return vec![(syms[0].0, 1)],
        _ => {}
    }
    // Nodes 0..k are leaves; merged nodes follow.
    let k = syms.len();
    let mut parent = vec![usize::MAX; 2 * k - 1];
    let mut heap: BinaryHeap<Reverse<(u64, u64, usize)>> = syms
        .iter()
        .enumerate()
        .map(|(i, &(sym, count))| Reverse((count, sym, i)))
        .collect();
    let mut next = k;
    while heap.len() > 1 {
        let Reverse((c1, s1, a)) = heap.pop().expect("two entries");
        let Reverse((c2, s2, b)) = heap.pop().expect("two entries");
        parent[a] = next;
        parent[b] = next;
        heap.push(Reverse((c1 + c2, s1.min(s2), next)));
        next += 1;
    }
    let mut depth = vec![0u32; 2 * k - 1];
    for i in (0..2 * k - 2).rev() {
        depth[i] = depth[parent[i]] + 1;
    }
    syms.iter()
        .enumerate()
        .map(|(i, &(s, _))| (s, depth[i]))
        .collect()
}

/// Canonical code: symbols ordered by (length, symbol) get consecutive
/// codewords.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalCode {
    /// `(symbol, length, codeword)` in canonical order.
    pub entries: Vec<(u64, u32, u64)>,
}

impl CanonicalCode {
    pub fn from_lengths(lengths: &[(u64, u32)]) -> Self {
        let mut sorted = lengths.to_vec();
        sorted.sort_unstable_by_key(|&(s, l)| (l, s));
        let mut entries = Vec::with_capacity(sorted.len());
        let mut code = 0u64;
        let mut prev_len = sorted.first().map_or(0, |e| e.1);
        for (i, &(sym, len)) in sorted.iter().enumerate() {
            if i > 0 {
                code = (code + 1) << (len - prev_len);
            }
            entries.push((sym, len, code));
            prev_len = len;
        }
        Self { entries }
    }

    pub fn build(symbols: &[u64]) -> Self {
        let mut counts: FxHashMap<u64, u64> = FxHashMap::default();
        for &s in symbols {
            *counts.entry(s).or_default() += 1;
        }
        let freqs: Vec<(u64, u64)> = counts.into_iter().collect();
        Self::from_lengths(&code_lengths(&freqs))
    }
}

enum Trie {
    Leaf(u64),
    Inner(Box<Trie>, Box<Trie>),
}

fn make_trie(code: &CanonicalCode) -> Trie {
    fn insert(node: &mut Option<Trie>, sym: u64, len: u32, code: u64) {
        if len == 0 {
            *node = Some(Trie::Leaf(sym));
            return;
        }
        let mut l = None;
        let mut r = None;
        if let Some(Trie::Inner(a, b)) = node.take() {
            l = Some(*a);
            r = Some(*b);
        }
        let bit = code >> (len - 1) & 1;
        insert(if bit == 0 { &mut l } else { &mut r }, sym, len - 1, code);
        *node = Some(Trie::Inner(
            Box::new(l.unwrap_or(Trie::Leaf(u64::MAX))),
            Box::new(r.unwrap_or(Trie::Leaf(u64::MAX))),
        ));
    }
    let mut root = None;
    for &(sym, len, c) in &code.entries {
        insert(&mut root, sym, len, c);
    }
    // Only a single-symbol code leaves a hole; fill it with that symbol.
    if let Some(Trie::Inner(a, b)) = &mut root {
        if let (Trie::Leaf(x), Trie::Leaf(u64::MAX)) = (a.as_ref(), b.as_ref()) {
            let x = *x;
            **b = Trie::Leaf(x);
        }
    }
    root.expect("non-empty code")
}

fn push_bits(out: &mut Bits, value: u64, width: u32) {
    for i in (0..width).rev() {
        out.push(value >> i & 1 == 1);
    }
}

/// Appends a coded segment for `symbols`, each below `1 << width`. Writes
/// nothing for an empty sequence. Returns the number of bits written.
pub fn encode_segment(symbols: &[u64], width: u32, out: &mut Bits) -> u64 {
    if symbols.is_empty() {
        return 0;
    }
    let start = out.len();
    let code = CanonicalCode::build(symbols);
    let trie = make_trie(&code);
    let mut leaves = Vec::new();
    let mut stack = vec![&trie];
    while let Some(node) = stack.pop() {
        match node {
            Trie::Leaf(s) => leaves.push(*s),
            Trie::Inner(a, b) => {
                out.push(matches!(**a, Trie::Inner(..)));
                out.push(matches!(**b, Trie::Inner(..)));
                stack.push(b);
                stack.push(a);
            }
        }
    }
    for s in leaves {
        debug_assert!(width >= 64 || s >> width == 0);
        push_bits(out, s, width);
    }
    let table: FxHashMap<u64, (u32, u64)> =
        code.entries.iter().map(|&(s, l, c)| (s, (l, c))).collect();
    for s in symbols {
        let (len, c) = table[s];
        push_bits(out, c, len);
    }
    (out.len() - start) as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentError {
    /// Ran past the end of the segment.
    Exhausted,
    /// Trailing bits left over.
    Trailing(u64),
    /// Symbols present but the segment is empty, or vice versa.
    Shape,
}

/// Reads fixed-width integers from a bit slice.
pub struct BitReader<'a> {
    bits: &'a BitStr,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a BitStr) -> Self {
        Self { bits, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn bit(&mut self) -> Result<bool, SegmentError> {
        let b = *self.bits.get(self.pos).ok_or(SegmentError::Exhausted)?;
        self.pos += 1;
        Ok(b)
    }

    pub fn read(&mut self, width: u32) -> Result<u64, SegmentError> {
        if self.remaining() < width as usize {
            return Err(SegmentError::Exhausted);
        }
        let mut v = 0u64;
        for _ in 0..width {
            v = v << 1 | self.bit()? as u64;
        }
        Ok(v)
    }
}

/// Decodes a segment holding exactly `count` symbols of `width` bits.
pub fn decode_segment(bits: &BitStr, count: u64, width: u32) -> Result<Vec<u64>, SegmentError> {
    if count == 0 {
        return if bits.is_empty() {
            Ok(Vec::new())
        } else {
            Err(SegmentError::Shape)
        };
    }
    // Every codeword takes at least one bit.
    if count > bits.len() as u64 {
        return Err(SegmentError::Exhausted);
    }
    let mut r = BitReader::new(bits);
    #[derive(Clone, Copy)]
    enum Child {
        Inner(u32),
        Leaf(u32),
    }
    let mut kids: Vec<[Child; 2]> = Vec::new();
    let mut right_inner: Vec<bool> = Vec::new();
    let mut pending: Vec<usize> = Vec::new();
    let mut slot: Option<(usize, usize)> = None;
    let mut leaf_count = 0u32;
    loop {
        let (l, rr) = (r.bit()?, r.bit()?);
        let id = kids.len();
        kids.push([Child::Leaf(0); 2]);
        right_inner.push(rr);
        if let Some((n, side)) = slot {
            kids[n][side] = Child::Inner(id as u32);
        }
        pending.push(id);
        if l {
            slot = Some((id, 0));
            continue;
        }
        kids[id][0] = Child::Leaf(leaf_count);
        leaf_count += 1;
        slot = None;
        while let Some(n) = pending.pop() {
            if right_inner[n] {
                slot = Some((n, 1));
                break;
            }
            kids[n][1] = Child::Leaf(leaf_count);
            leaf_count += 1;
        }
        if slot.is_none() {
            break;
        }
    }
    let mut leaves = Vec::with_capacity(leaf_count as usize);
    for _ in 0..leaf_count {
        leaves.push(r.read(width)?);
    }
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let mut node = 0usize;
        loop {
            match kids[node][r.bit()? as usize] {
                Child::Leaf(i) => {
                    out.push(leaves[i as usize]);
                    break;
                }
                Child::Inner(i) => node = i as usize,
            }
        }
    }
    if r.remaining() > 0 {
        return Err(SegmentError::Trailing(r.remaining() as u64));
    }
    Ok(out)
}
