//! The `lanebpe` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or parse error, 3 engine
//! divergence found by `verify`. Global options go before the subcommand and
//! can also be set through `LANEBPE_*` environment variables; flags win over
//! the environment.

use std::ffi::OsString;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use lanebpe_core::{BlockConfig, EngineKind, TokenId};

use crate::batch::{default_workers, split_lines, tokenize_batch, BatchConfig};
use crate::bench::{make_windows, run_sweep, SweepSpec, DEFAULT_LENGTHS};
use crate::files::{format_ids, load_golden};
use crate::golden::compare_golden;
use crate::profile::ProfileReport;
use crate::report::{emit_report, ReportFormat};
use crate::tokenizer::Tokenizer;

/// Name of the golden token file looked up inside `bench --golden DIR`.
pub const GOLDEN_CORPUS_FILE: &str = "corpus.ids";

#[derive(Debug, Parser)]
#[command(
    name = "lanebpe",
    version,
    about = "GPT-2 byte-level BPE with lane-model merge engines"
)]
struct Cli {
    /// GPT-2 vocabulary JSON.
    #[arg(long, env = "LANEBPE_VOCAB", default_value = "data/gpt2/vocab.json")]
    vocab: PathBuf,
    /// GPT-2 merges file.
    #[arg(long, env = "LANEBPE_MERGES", default_value = "data/gpt2/merges.txt")]
    merges: PathBuf,
    /// Merge engine: sequential, baseline or optimized.
    #[arg(long, env = "LANEBPE_ENGINE", default_value = "optimized")]
    engine: EngineKind,
    /// Lanes per block.
    #[arg(long, env = "LANEBPE_LANE_COUNT", default_value_t = 256)]
    lane_count: usize,
    /// Tokens per block.
    #[arg(long, env = "LANEBPE_MAX_SEQ_LEN", default_value_t = 8192)]
    max_seq_len: usize,
    /// Chunk size for inputs longer than a block [default: max-seq-len].
    #[arg(long, env = "LANEBPE_CHUNK_BUDGET")]
    chunk_budget: Option<usize>,
    /// Worker threads [default: available parallelism].
    #[arg(long, env = "LANEBPE_WORKERS")]
    workers: Option<usize>,
    /// Seed for window sampling.
    #[arg(long, env = "LANEBPE_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TokenFormat {
    /// One decimal id per line, documents separated by a blank line.
    Ids,
    /// A JSON array holding one id array per document.
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Split {
    /// Every line is a document.
    Lines,
    /// The whole input is one document.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportKind {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProfileFormat {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tokenize a file (or stdin) and print token ids.
    Tokenize {
        /// Input file; stdin when omitted or "-".
        input: Option<PathBuf>,
        /// Write ids here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "ids")]
        format: TokenFormat,
        #[arg(long, value_enum, default_value = "lines")]
        split: Split,
    },
    /// Run all three engines over a corpus and check they agree.
    Verify {
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "lines")]
        split: Split,
        /// Corrupt one compaction in the optimized engine (self-test).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Sweep fixed-length windows and report latency and throughput.
    Bench {
        corpus: PathBuf,
        /// Window lengths in tokens.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LENGTHS)]
        lengths: Vec<usize>,
        /// Engines to run.
        #[arg(long, value_delimiter = ',', default_values_t = EngineKind::ALL)]
        engines: Vec<EngineKind>,
        /// Windows per length.
        #[arg(long, default_value_t = 2)]
        samples: usize,
        /// Untimed runs per record.
        #[arg(long, default_value_t = 3)]
        warmup: usize,
        /// Timed runs per record.
        #[arg(long, default_value_t = 10)]
        runs: usize,
        /// Directory holding `corpus.ids`, golden tokens for the corpus.
        /// Windows are then cut in token space and checked against it.
        #[arg(long)]
        golden: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: ReportKind,
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Engine the speedup column is relative to.
        #[arg(long, default_value = "sequential")]
        baseline: String,
    },
    /// Tokenize a whole corpus as one chunked document and report counters.
    Profile {
        corpus: PathBuf,
        /// Runs on the same tokenizer; later runs reuse pooled buffers.
        #[arg(long, default_value_t = 2)]
        repeat: usize,
        #[arg(long, value_enum, default_value = "table")]
        format: ProfileFormat,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Divergence,
}

impl Failure {
    fn data(e: impl Into<anyhow::Error>) -> Self {
        Failure::Data(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.into())
    }
}

/// Runs the CLI with explicit streams and returns the exit code.
pub fn run_cli<I, T>(
    args: I,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli, stdin, stdout) {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            let _ = writeln!(stderr, "error: {e:#}");
            1
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(stderr, "error: {e:#}");
            2
        }
        Err(Failure::Divergence) => 3,
    }
}

fn batch_config(cli: &Cli) -> Result<BatchConfig, Failure> {
    let block =
        BlockConfig::new(cli.lane_count, cli.max_seq_len).map_err(|e| Failure::Usage(e.into()))?;
    BatchConfig::new(
        block,
        cli.chunk_budget.unwrap_or(cli.max_seq_len),
        cli.workers.unwrap_or_else(default_workers),
    )
    .map_err(|e| Failure::Usage(e.into()))
}

fn load_tokenizer(cli: &Cli) -> Result<Tokenizer, Failure> {
    Tokenizer::from_files(&cli.vocab, &cli.merges).map_err(Failure::data)
}

fn read_input(path: Option<&Path>, stdin: &mut dyn Read) -> Result<Vec<u8>, Failure> {
    match path {
        None => read_stdin(stdin),
        Some(p) if p == Path::new("-") => read_stdin(stdin),
        Some(p) => fs::read(p)
            .with_context(|| format!("reading {}", p.display()))
            .map_err(Failure::Data),
    }
}

fn read_stdin(stdin: &mut dyn Read) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    stdin.read_to_end(&mut buf)?;
    Ok(buf)
}

fn documents(input: &[u8], split: Split) -> Vec<&[u8]> {
    match split {
        Split::Lines => split_lines(input),
        Split::None if input.is_empty() => Vec::new(),
        Split::None => vec![input],
    }
}

fn render_ids(docs: &[Vec<TokenId>], format: TokenFormat) -> Result<String, Failure> {
    Ok(match format {
        TokenFormat::Ids => docs
            .iter()
            .map(|d| format_ids(d))
            .collect::<Vec<_>>()
            .join("\n"),
        TokenFormat::Json => serde_json::to_string(docs).map_err(Failure::data)? + "\n",
    })
}

fn run(cli: Cli, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<(), Failure> {
    let config = batch_config(&cli)?;
    match &cli.command {
        Command::Tokenize {
            input,
            output,
            format,
            split,
        } => {
            let tokenizer = load_tokenizer(&cli)?;
            let bytes = read_input(input.as_deref(), stdin)?;
            let docs = documents(&bytes, *split);
            let result =
                tokenize_batch(&tokenizer, &docs, cli.engine, &config).map_err(Failure::data)?;
            let text = render_ids(&result.token_ids, *format)?;
            match output {
                Some(path) => fs::write(path, text)
                    .with_context(|| format!("writing {}", path.display()))
                    .map_err(Failure::Data)?,
                None => stdout.write_all(text.as_bytes())?,
            }
        }
        Command::Verify {
            corpus,
            split,
            inject_fault,
        } => {
            let tokenizer = load_tokenizer(&cli)?;
            let bytes = read_input(Some(corpus), stdin)?;
            let docs = documents(&bytes, *split);
            let mut outputs = Vec::new();
            for engine in EngineKind::ALL {
                let cfg = if *inject_fault && engine == EngineKind::Optimized {
                    config.with_injected_fault()
                } else {
                    config
                };
                let result =
                    tokenize_batch(&tokenizer, &docs, engine, &cfg).map_err(Failure::data)?;
                outputs.push((engine, result));
            }
            let (_, reference) = &outputs[0];
            writeln!(
                stdout,
                "verified {} sequences ({} chunks, {} byte-level tokens) with {}",
                docs.len(),
                reference.chunks,
                reference.input_tokens,
                EngineKind::ALL.map(EngineKind::label).join(", ")
            )?;
            let mut divergent = 0;
            let mut first = None;
            for doc in 0..docs.len() {
                let want = &reference.token_ids[doc];
                let mut bad = false;
                for (engine, result) in &outputs[1..] {
                    let report = compare_golden(&result.token_ids[doc], want);
                    if !report.exact_match {
                        bad = true;
                        first.get_or_insert((doc, *engine, report.first_divergence.unwrap_or(0)));
                    }
                }
                divergent += usize::from(bad);
            }
            writeln!(stdout, "{divergent} divergences")?;
            if let Some((doc, engine, pos)) = first {
                writeln!(
                    stdout,
                    "first divergence: sequence {doc}, {engine} vs sequential at token {pos}"
                )?;
                return Err(Failure::Divergence);
            }
        }
        Command::Bench {
            corpus,
            lengths,
            engines,
            samples,
            warmup,
            runs,
            golden,
            format,
            output,
            baseline,
        } => {
            let tokenizer = load_tokenizer(&cli)?;
            let bytes = read_input(Some(corpus), stdin)?;
            let spec = SweepSpec {
                lengths: lengths.clone(),
                samples_per_length: *samples,
                warmup_runs: *warmup,
                measured_runs: *runs,
                seed: cli.seed,
            };
            spec.validate().map_err(|e| Failure::Usage(e.into()))?;
            let golden_tokens = golden
                .as_ref()
                .map(|dir| load_golden(&dir.join(GOLDEN_CORPUS_FILE)))
                .transpose()
                .map_err(Failure::data)?;
            let windows = make_windows(&tokenizer, &bytes, golden_tokens.as_deref(), &spec)
                .map_err(Failure::data)?;
            let records =
                run_sweep(&tokenizer, &windows, engines, &spec, &config).map_err(Failure::data)?;
            let format = match format {
                ReportKind::Csv => ReportFormat::Csv,
                ReportKind::Json => ReportFormat::Json,
                ReportKind::Table => ReportFormat::Table,
            };
            let report = emit_report(&records, format, baseline).map_err(Failure::data)?;
            match output {
                Some(path) => fs::write(path, report)
                    .with_context(|| format!("writing {}", path.display()))
                    .map_err(Failure::Data)?,
                None => stdout.write_all(report.as_bytes())?,
            }
        }
        Command::Profile {
            corpus,
            repeat,
            format,
        } => {
            if *repeat == 0 {
                return Err(Failure::Usage(anyhow!("--repeat must be at least 1")));
            }
            let tokenizer = load_tokenizer(&cli)?;
            let bytes = read_input(Some(corpus), stdin)?;
            let docs = documents(&bytes, Split::None);
            let mut reports = Vec::with_capacity(*repeat);
            for _ in 0..*repeat {
                let result = tokenize_batch(&tokenizer, &docs, cli.engine, &config)
                    .map_err(Failure::data)?;
                reports.push(ProfileReport::from_batch(cli.engine.label(), &result));
            }
            match format {
                ProfileFormat::Json => {
                    let text = serde_json::to_string_pretty(&reports).map_err(Failure::data)?;
                    writeln!(stdout, "{text}")?;
                }
                ProfileFormat::Table => {
                    for (i, r) in reports.iter().enumerate() {
                        writeln!(stdout, "run {}", i + 1)?;
                        write!(stdout, "{r}")?;
                    }
                }
            }
        }
    }
    Ok(())
}
