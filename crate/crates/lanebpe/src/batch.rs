//! The host pipeline: byte-encode every text, chunk the ones that do not fit
//! in a block, run the engine over all chunks on a worker pool, and stitch
//! the outputs back together in input order.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use lanebpe_core::engines::DEFAULT_MAX_SEQ_LEN;
use lanebpe_core::{
    chunk_tokens, BlockConfig, ChunkError, CodecError, EngineError, EngineKind, PassCounters,
    TokenId,
};
use thiserror::Error;

use crate::tokenizer::Tokenizer;

/// Pipeline settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchConfig {
    block: BlockConfig,
    chunk_budget: usize,
    workers: usize,
    inject_fault: bool,
}

/// Invalid pipeline settings.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    /// Chunk budget outside `2..=max_seq_len`.
    #[error("chunk budget {budget} must be between 2 and max_seq_len ({max})")]
    ChunkBudget {
        /// Requested budget.
        budget: usize,
        /// Block capacity.
        max: usize,
    },
    /// Zero workers.
    #[error("worker count must be at least 1")]
    Workers,
}

/// Default worker count: the machine's available parallelism.
pub fn default_workers() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}

impl BatchConfig {
    /// Validates `2 <= chunk_budget <= block.max_seq_len()` and `workers >= 1`.
    pub fn new(
        block: BlockConfig,
        chunk_budget: usize,
        workers: usize,
    ) -> Result<Self, ConfigError> {
        if chunk_budget < 2 || chunk_budget > block.max_seq_len() {
            return Err(ConfigError::ChunkBudget {
                budget: chunk_budget,
                max: block.max_seq_len(),
            });
        }
        if workers == 0 {
            return Err(ConfigError::Workers);
        }
        Ok(BatchConfig {
            block,
            chunk_budget,
            workers,
            inject_fault: false,
        })
    }

    /// Block shape.
    pub fn block(&self) -> BlockConfig {
        self.block
    }

    /// Tokens per chunk for inputs longer than one block.
    pub fn chunk_budget(&self) -> usize {
        self.chunk_budget
    }

    /// Worker threads.
    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Same settings with a different worker count.
    pub fn with_workers(mut self, workers: usize) -> Result<Self, ConfigError> {
        if workers == 0 {
            return Err(ConfigError::Workers);
        }
        self.workers = workers;
        Ok(self)
    }

    /// Test hook: every worker in the batch corrupts one block compaction.
    #[doc(hidden)]
    pub fn with_injected_fault(mut self) -> Self {
        self.inject_fault = true;
        self
    }
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            block: BlockConfig::default(),
            chunk_budget: DEFAULT_MAX_SEQ_LEN,
            workers: default_workers(),
            inject_fault: false,
        }
    }
}

/// Wall-clock split of one batch, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StageTimings {
    /// Byte encoding and chunking.
    pub encode_ms: f64,
    /// Dispatching chunks to workers until the last one finishes.
    pub engine_ms: f64,
    /// Concatenating chunk outputs.
    pub assemble_ms: f64,
    /// The whole call.
    pub total_ms: f64,
}

/// Output of [`tokenize_batch`].
#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    /// Merged ids per input, in input order.
    pub token_ids: Vec<Vec<TokenId>>,
    /// Time spent inside engine merge loops, summed over chunks.
    pub engine_time_ms: f64,
    /// Stage split of the call.
    pub timings: StageTimings,
    /// Counters summed over chunks.
    pub counters: PassCounters,
    /// Number of chunks processed.
    pub chunks: usize,
    /// Byte-level ids fed to the engines.
    pub input_tokens: usize,
}

/// What failed inside a batch.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BatchErrorKind {
    /// Byte encoding failed.
    #[error(transparent)]
    Codec(#[from] CodecError),
    /// Chunking failed.
    #[error(transparent)]
    Chunk(#[from] ChunkError),
    /// The engine failed.
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// A batch failure, tagged with the input that caused it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("input {index}: {kind}")]
pub struct BatchError {
    /// Index of the failing input.
    pub index: usize,
    /// Underlying failure.
    #[source]
    pub kind: BatchErrorKind,
}

struct Job<'a> {
    source: usize,
    tokens: &'a [TokenId],
}

type JobOutput = Result<(Vec<TokenId>, PassCounters), EngineError>;

/// Tokenizes every text with `engine`.
///
/// Inputs longer than one block are cut into `chunk_budget`-sized chunks;
/// shorter ones go through whole. Merges never cross a chunk boundary.
pub fn tokenize_batch<T: AsRef<[u8]>>(
    tokenizer: &Tokenizer,
    texts: &[T],
    engine: EngineKind,
    config: &BatchConfig,
) -> Result<BatchResult, BatchError> {
    let start = Instant::now();

    let mut encoded = Vec::with_capacity(texts.len());
    for (index, text) in texts.iter().enumerate() {
        let ids = tokenizer
            .encode_bytes(text.as_ref())
            .map_err(|e| BatchError {
                index,
                kind: e.into(),
            })?;
        encoded.push(ids);
    }
    let mut jobs = Vec::new();
    for (source, ids) in encoded.iter().enumerate() {
        if ids.len() > config.block.max_seq_len() {
            let chunks =
                chunk_tokens(source, ids, config.chunk_budget).map_err(|e| BatchError {
                    index: source,
                    kind: e.into(),
                })?;
            jobs.extend(chunks.into_iter().map(|c| Job {
                source,
                tokens: c.tokens,
            }));
        } else if !ids.is_empty() {
            jobs.push(Job {
                source,
                tokens: ids,
            });
        }
    }
    let encoded_at = Instant::now();

    let (outputs, engine_nanos) = dispatch(tokenizer, &jobs, engine, config);
    let dispatched_at = Instant::now();

    let mut token_ids: Vec<Vec<TokenId>> = vec![Vec::new(); texts.len()];
    let mut counters = PassCounters::default();
    // Jobs are in (source, chunk) order, so appending restores each input.
    for (job, output) in jobs.iter().zip(outputs) {
        let (ids, c) = output.map_err(|e| BatchError {
            index: job.source,
            kind: e.into(),
        })?;
        token_ids[job.source].extend_from_slice(&ids);
        counters += c;
    }
    let end = Instant::now();

    let ms = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1e3;
    Ok(BatchResult {
        token_ids,
        engine_time_ms: engine_nanos as f64 / 1e6,
        timings: StageTimings {
            encode_ms: ms(start, encoded_at),
            engine_ms: ms(encoded_at, dispatched_at),
            assemble_ms: ms(dispatched_at, end),
            total_ms: ms(start, end),
        },
        counters,
        chunks: jobs.len(),
        input_tokens: encoded.iter().map(Vec::len).sum(),
    })
}

/// Runs every job; returns outputs in job order and the summed engine time.
fn dispatch(
    tokenizer: &Tokenizer,
    jobs: &[Job<'_>],
    engine: EngineKind,
    config: &BatchConfig,
) -> (Vec<JobOutput>, u64) {
    let threads = config.workers.min(jobs.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<JobOutput>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    let engine_nanos = AtomicU64::new(0);

    let work = || {
        let mut worker = tokenizer.checkout_worker(config.block);
        if config.inject_fault {
            worker.arm_fault();
        }
        let mut local = Vec::new();
        let mut nanos = 0u64;
        loop {
            let i = next.fetch_add(1, Ordering::Relaxed);
            let Some(job) = jobs.get(i) else { break };
            let t = Instant::now();
            let out = worker.run(engine, job.tokens, tokenizer.table());
            nanos += t.elapsed().as_nanos() as u64;
            local.push((i, out));
        }
        engine_nanos.fetch_add(nanos, Ordering::Relaxed);
        let mut slots = results.lock().unwrap_or_else(|e| e.into_inner());
        for (i, out) in local {
            slots[i] = Some(out);
        }
        drop(slots);
        if !config.inject_fault {
            tokenizer.return_worker(worker);
        }
    };

    if threads <= 1 {
        work();
    } else {
        thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(work);
            }
        });
    }

    let outputs = results
        .into_inner()
        .unwrap_or_else(|e| e.into_inner())
        .into_iter()
        .map(|o| o.expect("every job is claimed by exactly one worker"))
        .collect();
    (outputs, engine_nanos.into_inner())
}

/// Cuts `input` into documents at `\n`; a trailing newline does not start a
/// new document and empty input has no documents.
pub fn split_lines(input: &[u8]) -> Vec<&[u8]> {
    if input.is_empty() {
        return Vec::new();
    }
    let body = input.strip_suffix(b"\n").unwrap_or(input);
    body.split(|&b| b == b'\n').collect()
}
