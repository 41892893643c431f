//! Top tree compression for ordered labelled trees.
//!
//! The pipeline is: parse a tree ([`xml`], [`tree`]), build its top tree and
//! top DAG ([`toptree`], [`repair`], [`topdag`]), then either navigate the
//! DAG directly ([`nav`]) or write it to a compact file ([`codec`]).
//! [`randtree`] generates uniformly random ordered trees for experiments.

pub mod codec;
pub mod error;
pub mod nav;
pub mod randtree;
pub mod repair;
pub mod topdag;
pub mod toptree;
pub mod tree;
pub mod xml;

pub use codec::{decode_file, encode_file};
pub use error::{DecodeError, TreeError, XmlError};
pub use nav::{decompress, NavCursor};

pub use repair::RePairCombiner;
pub use topdag::{DagError, DagNode, DagStats, TopDag};
pub use toptree::{
    build_top_tree, BuildOptions, ClassicCombiner, HorizontalCombiner, MergeType, TopTree,
};
pub use tree::{build_tree, LabelTable, LabelledTree, TreeEvent, TreeStats};
pub use xml::{parse_xml, parse_xml_bytes, parse_xml_file};

/// Which horizontal combiner to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Combiner {
    #[default]
    Classic,
    RePair,
}

/// Builds the top tree and DAG of `tree` with the chosen combiner.
pub fn compress(
    tree: &LabelledTree,
    combiner: Combiner,
    options: &BuildOptions,
) -> (TopTree, TopDag) {
    match combiner {
        Combiner::Classic => build_top_tree(tree, &mut ClassicCombiner, options),
        Combiner::RePair => build_top_tree(tree, &mut RePairCombiner, options),
    }
}
