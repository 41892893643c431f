use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use toptree::{BuildOptions, Combiner};
use toptree_cli::{
    bench_cmd, compress_cmd, decompress_cmd, is_format_error, parse_script, random_cmd,
    traverse_cmd, CompressOptions,
};

#[derive(Parser)]
#[command(
    name = "toptree",
    version,
    about = "Top tree compression of XML element trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CombinerArg {
    Classic,
    Repair,
}

impl From<CombinerArg> for Combiner {
    fn from(c: CombinerArg) -> Self {
        match c {
            CombinerArg::Classic => Combiner::Classic,
            CombinerArg::Repair => Combiner::RePair,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compress an XML or event-format file.
    Compress {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum, default_value = "classic")]
        combiner: CombinerArg,
        /// Minimum merge ratio per iteration before the fallback combiner runs.
        #[arg(long, default_value_t = BuildOptions::default().min_merge_ratio)]
        ratio: f64,
        /// Seed for cluster hashing.
        #[arg(long, default_value_t = BuildOptions::default().hash_seed)]
        seed: u64,
        /// Print statistics as key=value lines.
        #[arg(long)]
        stats: bool,
    },
    /// Decompress to XML (nested empty tags).
    Decompress {
        input: PathBuf,
        /// Defaults to standard output.
        output: Option<PathBuf>,
    },
    /// Compare sizes and timings over a directory of files, as CSV.
    Bench {
        dir: PathBuf,
        #[arg(long, default_value_t = BuildOptions::default().hash_seed)]
        seed: u64,
    },
    /// Random-tree compression experiment, as CSV.
    Random {
        /// Comma-separated tree sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        sigma: u32,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "classic")]
        combiner: CombinerArg,
    },
    /// Run navigation operations, one per script line, from the root.
    Traverse {
        input: PathBuf,
        /// Script file; reads standard input when omitted.
        script: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.command {
        Command::Compress {
            input,
            output,
            combiner,
            ratio,
            seed,
            stats,
        } => {
            let opts = CompressOptions {
                combiner: combiner.into(),
                build: BuildOptions {
                    min_merge_ratio: ratio,
                    hash_seed: seed,
                },
            };
            let s = compress_cmd(&input, &output, &opts)?;
            if stats {
                s.write_to(&mut out)?;
            }
        }
        Command::Decompress { input, output } => match output {
            Some(path) => {
                let file =
                    File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                let mut w = BufWriter::new(file);
                decompress_cmd(&input, &mut w)?;
                w.flush()?;
            }
            None => decompress_cmd(&input, &mut out)?,
        },
        Command::Bench { dir, seed } => {
            let build = BuildOptions {
                hash_seed: seed,
                ..BuildOptions::default()
            };
            bench_cmd(&dir, &build, &mut out, &mut io::stderr())?;
        }
        Command::Random {
            sizes,
            sigma,
            trials,
            seed,
            combiner,
        } => random_cmd(&sizes, sigma, trials, seed, combiner.into(), &mut out)?,
        Command::Traverse { input, script } => {
            let ops = match script {
                Some(path) => parse_script(BufReader::new(
                    File::open(&path).with_context(|| format!("opening {}", path.display()))?,
                ))?,
                None => parse_script(io::stdin().lock())?,
            };
            traverse_cmd(&input, &ops, &mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_format_error(&e) { 2 } else { 1 })
        }
    }
}
