//! Uniformly random ordered trees and the random-tree compression experiment.
//!
//! Shapes are sampled with the Atkinson–Sack bijection: a uniformly shuffled
//! word of `n-1` up and `n-1` down steps is folded into a balanced word, each
//! balanced word having exactly `n` preimages. Labels are drawn i.i.d.
//! uniformly from `sigma` symbols.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::toptree::BuildOptions;
use crate::tree::{LabelTable, LabelledTree, NO_PARENT};
use crate::Combiner;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RandTreeError {
    #[error("a tree needs at least one node")]
    NoNodes,
    #[error("the label alphabet must not be empty")]
    NoLabels,
    #[error("tree too large for 32-bit node ids")]
    TooLarge,
}

/// Folds a word with equally many up (`true`) and down steps into a balanced
/// one.
///
/// The word is split into minimal balanced factors. A factor that starts with
/// an up step is kept as is. A factor `) t (` instead wraps everything after
/// it in a new pair and is followed by `t` with every step flipped.
pub fn balance_word(word: &[bool]) -> Vec<bool> {
    let mut front = Vec::with_capacity(word.len());
    let mut tails: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    let mut height = 0i64;
    for (i, &up) in word.iter().enumerate() {
        height += if up { 1 } else { -1 };
        if height != 0 {
            continue;
        }
        if word[start] {
            front.extend_from_slice(&word[start..=i]);
        } else {
            front.push(true);
            tails.push((start + 1, i));
        }
        start = i + 1;
    }
    debug_assert_eq!(height, 0, "word must be balanced in count");
    while let Some((lo, hi)) = tails.pop() {
        front.push(false);
        front.extend(word[lo..hi].iter().map(|&b| !b));
    }
    front
}

/// Parent array (pre-order) of the tree `( word )`.
fn parents_of(word: &[bool]) -> Vec<u32> {
    let mut parent = Vec::with_capacity(word.len() / 2 + 1);
    parent.push(NO_PARENT);
    let mut stack = vec![0u32];
    for &up in word {
        if up {
            let v = parent.len() as u32;
            parent.push(*stack.last().expect("balanced word"));
            stack.push(v);
        } else {
            stack.pop();
        }
    }
    parent
}

/// A uniformly random shape with `n` nodes as a balanced word of length
/// `2(n-1)` (the root's pair is implicit).
pub fn random_shape<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<bool> {
    let m = n.saturating_sub(1);
    let mut word = vec![false; 2 * m];
    word[..m].fill(true);
    word.shuffle(rng);
    balance_word(&word)
}

/// A uniformly random ordered tree with `n` nodes and labels `"0".."sigma-1"`.
pub fn random_tree_with<R: Rng + ?Sized>(
    n: usize,
    sigma: u32,
    rng: &mut R,
) -> Result<LabelledTree, RandTreeError> {
    if n == 0 {
        return Err(RandTreeError::NoNodes);
    }
    if sigma == 0 {
        return Err(RandTreeError::NoLabels);
    }
    if n >= NO_PARENT as usize {
        return Err(RandTreeError::TooLarge);
    }
    let parent = parents_of(&random_shape(n, rng));
    let mut table = LabelTable::new();
    let mut ids: FxHashMap<u32, u32> = FxHashMap::default();
    let labels = (0..n)
        .map(|_| {
            let sym = rng.random_range(0..sigma);
            *ids.entry(sym).or_insert_with(|| {
                table
                    .intern(sym.to_string().as_bytes())
                    .expect("decimal labels are valid")
            })
        })
        .collect();
    Ok(LabelledTree::from_parts(table, labels, parent).expect("generated tree is well formed"))
}

/// Deterministic per seed.
pub fn random_tree(n: usize, sigma: u32, seed: u64) -> Result<LabelledTree, RandTreeError> {
    random_tree_with(n, sigma, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Generator for trial `trial` of size `n`; independent of scheduling.
pub fn trial_rng(seed: u64, n: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) ^ trial as u64);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioRow {
    pub n: usize,
    pub trials: usize,
    /// Mean top DAG edge count.
    pub mean_edges: f64,
    /// Mean top DAG node count.
    pub mean_nodes: f64,
    /// Compression ratio `n / mean_edges` divided by `log_s n`, with
    /// `s = max(2, sigma)`.
    pub ratio: f64,
}

/// Compression ratio `n / edges` over its information-theoretic bound
/// `log_s n`, with the alphabet size clamped to at least 2.
pub fn normalized_ratio(edges: f64, n: usize, sigma: u32) -> f64 {
    let base = sigma.max(2) as f64;
    let log_n = (n as f64).ln() / base.ln();
    n as f64 / (edges * log_n)
}

/// For each size, compresses `trials` random trees and reports the mean top
/// DAG size against the `n / log_sigma n` lower bound.
pub fn ratio_experiment(
    sizes: &[usize],
    sigma: u32,
    trials: usize,
    seed: u64,
    combiner: Combiner,
) -> Result<Vec<RatioRow>, RandTreeError> {
    let options = BuildOptions::default();
    sizes
        .iter()
        .map(|&n| {
            let per_trial: Vec<(usize, usize)> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let tree = random_tree_with(n, sigma, &mut trial_rng(seed, n, t))?;
                    let (_, dag) = crate::compress(&tree, combiner, &options);
                    let s = dag.stats();
                    Ok((s.edges, s.nodes))
                })
                .collect::<Result<_, RandTreeError>>()?;
            let edges: usize = per_trial.iter().map(|p| p.0).sum();
            let nodes: usize = per_trial.iter().map(|p| p.1).sum();
            let denom = trials.max(1) as f64;
            let mean_edges = edges as f64 / denom;
            Ok(RatioRow {
                n,
                trials,
                mean_edges,
                mean_nodes: nodes as f64 / denom,
                ratio: normalized_ratio(mean_edges, n, sigma),
            })
        })
        .collect()
}
