use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("empty input")]
    Empty,
    #[error("unbalanced open/close sequence")]
    Unbalanced,
    #[error("more than one top-level node")]
    MultipleRoots,
    #[error("label {0:?} contains a zero byte")]
    ZeroByteInLabel(Vec<u8>),
    #[error("duplicate label {0:?}")]
    DuplicateLabel(Vec<u8>),
    #[error("label id {0} is not in the label table")]
    UnknownLabel(u32),
    #[error("node {0} breaks pre-order numbering")]
    NotPreorder(usize),
    #[error("tree too large for 32-bit node ids")]
    TooLarge,
}

#[derive(Debug, Error)]
pub enum XmlError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed XML at byte {offset}: {message}")]
    Syntax { offset: u64, message: String },
    #[error("document has no root element")]
    Empty,
    #[error("invalid tree at byte {offset}: {source}")]
    Tree { offset: u64, source: TreeError },
}

/// Errors raised while reading an encoded file or rebuilding a DAG from it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("bad magic number")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("file truncated")]
    Truncated,
    #[error("header field {0} out of range")]
    BadHeader(&'static str),
    #[error("segment {segment} is malformed: {reason}")]
    BadSegment {
        segment: &'static str,
        reason: &'static str,
    },
    #[error("segment {segment} declared {declared} bits but decoding used {used}")]
    SegmentLength {
        segment: &'static str,
        declared: u64,
        used: u64,
    },
    #[error("payload length {actual} bytes does not match header ({expected} bytes)")]
    PayloadLength { expected: u64, actual: u64 },
    #[error("reference {reference} out of range (limit {limit})")]
    ReferenceOutOfRange { reference: u64, limit: u64 },
    #[error("references form a cycle")]
    Cyclic,
    #[error("merge types are inconsistent with cluster boundaries")]
    InconsistentMerge,
    #[error("tree size mismatch: header says {expected}, DAG expands to {actual}")]
    TreeSize { expected: u64, actual: u64 },
    #[error("label table: {0}")]
    Labels(TreeError),
}
