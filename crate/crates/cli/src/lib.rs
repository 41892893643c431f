//! Command implementations behind the `toptree` binary.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use toptree::randtree::ratio_experiment;
use toptree::tree::TreeEvent;
use toptree::{
    build_tree, compress, decode_file, decompress, encode_file, parse_xml_bytes, BuildOptions,
    Combiner, DagError, DecodeError, LabelledTree, NavCursor, TopDag, TreeError, XmlError,
};

/// Errors that mean the input data itself is bad, as opposed to a usage or
/// I/O problem.
pub fn is_format_error(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.is::<DecodeError>()
            || e.is::<DagError>()
            || e.is::<TreeError>()
            || e.downcast_ref::<XmlError>()
                .is_some_and(|x| !matches!(x, XmlError::Io(_)))
    })
}

/// Parses XML, or the line-based event format (`open LABEL` / `close`) when
/// the first non-blank byte is not `<`.
pub fn parse_input(data: &[u8]) -> Result<LabelledTree> {
    let first = data.iter().find(|b| !b.is_ascii_whitespace());
    if first == Some(&b'<') {
        return Ok(parse_xml_bytes(data)?);
    }
    let mut events = Vec::new();
    for (i, line) in data.split(|&b| b == b'\n').enumerate() {
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        if let Some(label) = line.strip_prefix(b"open ") {
            events.push(TreeEvent::Open(label.to_vec()));
        } else if line == b"close" {
            events.push(TreeEvent::Close);
        } else {
            return Err(TreeError::Unbalanced)
                .with_context(|| format!("bad event on line {}", i + 1));
        }
    }
    Ok(build_tree(events)?)
}

pub fn read_tree(path: &Path) -> Result<LabelledTree> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_input(&data).with_context(|| format!("parsing {}", path.display()))
}

pub fn read_encoded(path: &Path) -> Result<(TopDag, toptree::LabelTable)> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode_file(&data).with_context(|| format!("decoding {}", path.display()))
}

#[derive(Clone, Debug)]
pub struct CompressOptions {
    pub combiner: Combiner,
    pub build: BuildOptions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompressStats {
    pub nodes: usize,
    pub height: usize,
    pub top_tree_size: usize,
    pub iterations: u32,
    pub dag_nodes: usize,
    pub dag_edges: usize,
    pub output_bytes: usize,
    pub baseline_bytes: u64,
}

impl CompressStats {
    /// Output size as a fraction of the succinct baseline.
    pub fn ratio(&self) -> f64 {
        self.output_bytes as f64 / self.baseline_bytes as f64
    }

    pub fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "nodes={}", self.nodes)?;
        writeln!(out, "height={}", self.height)?;
        writeln!(out, "top_tree_size={}", self.top_tree_size)?;
        writeln!(out, "iterations={}", self.iterations)?;
        writeln!(out, "dag_nodes={}", self.dag_nodes)?;
        writeln!(out, "dag_edges={}", self.dag_edges)?;
        writeln!(out, "output_bytes={}", self.output_bytes)?;
        writeln!(out, "baseline_bytes={}", self.baseline_bytes)?;
        writeln!(out, "ratio={:.6}", self.ratio())
    }
}

/// Compresses a tree to the encoded file format.
pub fn compress_tree(tree: &LabelledTree, opts: &CompressOptions) -> (Vec<u8>, CompressStats) {
    let (top, dag) = compress(tree, opts.combiner, &opts.build);
    let bytes = encode_file(&dag, tree.labels());
    let dag_stats = dag.stats();
    let stats = CompressStats {
        nodes: tree.len(),
        height: tree.stats().height,
        top_tree_size: top.len(),
        iterations: top.iterations(),
        dag_nodes: dag_stats.nodes,
        dag_edges: dag_stats.edges,
        output_bytes: bytes.len(),
        baseline_bytes: tree.succinct_size_bits().div_ceil(8),
    };
    (bytes, stats)
}

pub fn compress_cmd(input: &Path, output: &Path, opts: &CompressOptions) -> Result<CompressStats> {
    let tree = read_tree(input)?;
    let (bytes, stats) = compress_tree(&tree, opts);
    fs::write(output, bytes).with_context(|| format!("writing {}", output.display()))?;
    Ok(stats)
}

pub fn decompress_cmd(input: &Path, out: &mut impl Write) -> Result<()> {
    let (dag, labels) = read_encoded(input)?;
    let tree = decompress(&dag, &labels)?;
    out.write_all(&tree.to_xml())?;
    out.write_all(b"\n")?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub file: String,
    pub nodes: usize,
    pub succinct_bytes: u64,
    pub classic_bytes: usize,
    pub repair_bytes: usize,
    pub parse_ms: f64,
    pub classic_ms: f64,
    pub repair_ms: f64,
    pub decompress_ms: f64,
}

const BENCH_HEADER: [&str; 9] = [
    "file",
    "nodes",
    "succinct_bytes",
    "classic_bytes",
    "repair_bytes",
    "parse_ms",
    "classic_ms",
    "repair_ms",
    "decompress_ms",
];

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn bench_file(path: &Path, build: &BuildOptions) -> Result<BenchRow> {
    let data = fs::read(path)?;
    let t = Instant::now();
    let tree = parse_input(&data)?;
    let parse_ms = ms(t);
    let run = |combiner| {
        let t = Instant::now();
        let (bytes, _) = compress_tree(
            &tree,
            &CompressOptions {
                combiner,
                build: *build,
            },
        );
        (bytes, ms(t))
    };
    let (classic, classic_ms) = run(Combiner::Classic);
    let (repair, repair_ms) = run(Combiner::RePair);
    let t = Instant::now();
    let (dag, labels) = decode_file(&classic)?;
    let back = decompress(&dag, &labels)?;
    let decompress_ms = ms(t);
    if back != tree {
        bail!("round trip mismatch");
    }
    Ok(BenchRow {
        file: path
            .file_name()
            .map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
        nodes: tree.len(),
        succinct_bytes: tree.succinct_size_bits().div_ceil(8),
        classic_bytes: classic.len(),
        repair_bytes: repair.len(),
        parse_ms,
        classic_ms,
        repair_ms,
        decompress_ms,
    })
}

/// Compresses every file in `dir` (sorted by name) with both combiners and
/// writes one CSV row per file. Files that cannot be read or parsed are
/// reported on `warn` and skipped.
pub fn bench_cmd(
    dir: &Path,
    build: &BuildOptions,
    out: impl Write,
    warn: &mut impl Write,
) -> Result<Vec<BenchRow>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(BENCH_HEADER)?;
    let mut rows = Vec::new();
    for path in paths {
        match bench_file(&path, build) {
            Ok(row) => {
                csv.write_record([
                    row.file.clone(),
                    row.nodes.to_string(),
                    row.succinct_bytes.to_string(),
                    row.classic_bytes.to_string(),
                    row.repair_bytes.to_string(),
                    format!("{:.3}", row.parse_ms),
                    format!("{:.3}", row.classic_ms),
                    format!("{:.3}", row.repair_ms),
                    format!("{:.3}", row.decompress_ms),
                ])?;
                rows.push(row);
            }
            Err(e) => writeln!(warn, "warning: skipping {}: {e:#}", path.display())?,
        }
    }
    csv.flush()?;
    Ok(rows)
}

pub fn random_cmd(
    sizes: &[usize],
    sigma: u32,
    trials: usize,
    seed: u64,
    combiner: Combiner,
    out: impl Write,
) -> Result<()> {
    let rows = ratio_experiment(sizes, sigma, trials, seed, combiner)?;
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(["n", "trials", "mean_edges", "mean_nodes", "ratio"])?;
    for r in rows {
        csv.write_record([
            r.n.to_string(),
            r.trials.to_string(),
            format!("{:.3}", r.mean_edges),
            format!("{:.3}", r.mean_nodes),
            format!("{:.6}", r.ratio),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NavOp {
    FirstChild,
    NextSibling,
    Parent,
    IsLeaf,
    IsLastChild,
    Label,
}

impl std::str::FromStr for NavOp {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "first_child" => NavOp::FirstChild,
            "next_sibling" => NavOp::NextSibling,
            "parent" => NavOp::Parent,
            "is_leaf" => NavOp::IsLeaf,
            "is_last_child" => NavOp::IsLastChild,
            "label" => NavOp::Label,
            other => bail!("unknown operation {other:?}"),
        })
    }
}

pub fn parse_script(script: impl BufRead) -> Result<Vec<NavOp>> {
    let mut ops = Vec::new();
    for (i, line) in script.lines().enumerate() {
        let line = line?;
        let op = line.trim();
        if op.is_empty() {
            continue;
        }
        ops.push(
            op.parse()
                .with_context(|| format!("script line {}", i + 1))?,
        );
    }
    Ok(ops)
}

/// Runs navigation operations from the root. Moves print the new node's
/// label, or `none` when the move is impossible; predicates print
/// `true`/`false`.
pub fn traverse_cmd(input: &Path, ops: &[NavOp], out: &mut impl Write) -> Result<()> {
    let (dag, labels) = read_encoded(input)?;
    let mut cursor = NavCursor::at_root(&dag)?;
    let label = |c: &NavCursor| {
        String::from_utf8_lossy(labels.get(c.label()).expect("decoded labels cover the DAG"))
            .into_owned()
    };
    for op in ops {
        let moved = match op {
            NavOp::FirstChild => cursor.first_child(),
            NavOp::NextSibling => cursor.next_sibling(),
            NavOp::Parent => cursor.parent(),
            NavOp::IsLeaf => {
                writeln!(out, "{}", cursor.is_leaf())?;
                continue;
            }
            NavOp::IsLastChild => {
                writeln!(out, "{}", cursor.is_last_child())?;
                continue;
            }
            NavOp::Label => true,
        };
        if moved {
            writeln!(out, "{}", label(&cursor))?;
        } else {
            writeln!(out, "none")?;
        }
    }
    Ok(())
}
