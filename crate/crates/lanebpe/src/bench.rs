//! Fixed-length window sweeps: cut windows out of a corpus, run each engine
//! over them with warmup and measured repetitions, and record mean latency
//! and throughput per (engine, length).

use std::time::Instant;

use lanebpe_core::{CodecError, EngineKind, TokenId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batch::{tokenize_batch, BatchConfig, BatchError};
use crate::golden::compare_golden;
use crate::tokenizer::Tokenizer;

/// Window lengths swept by default, in tokens.
pub const DEFAULT_LENGTHS: [usize; 5] = [256, 1024, 4096, 16384, 131_072];

/// Sweep parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSpec {
    /// Window sizes in tokens, ascending.
    pub lengths: Vec<usize>,
    /// Windows sampled per length.
    pub samples_per_length: usize,
    /// Untimed runs before measuring.
    pub warmup_runs: usize,
    /// Timed runs averaged into each record.
    pub measured_runs: usize,
    /// Seed for window placement.
    pub seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            lengths: DEFAULT_LENGTHS.to_vec(),
            samples_per_length: 2,
            warmup_runs: 3,
            measured_runs: 10,
            seed: 0,
        }
    }
}

impl SweepSpec {
    /// Checks that every count is positive and lengths ascend.
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.lengths.is_empty() || self.lengths.contains(&0) {
            return Err(BenchError::InvalidSpec(
                "lengths must be non-empty and positive",
            ));
        }
        if !self.lengths.windows(2).all(|w| w[0] < w[1]) {
            return Err(BenchError::InvalidSpec(
                "lengths must be strictly ascending",
            ));
        }
        if self.samples_per_length == 0 || self.measured_runs == 0 {
            return Err(BenchError::InvalidSpec(
                "samples_per_length and measured_runs must be positive",
            ));
        }
        Ok(())
    }
}

/// Sweep failures.
#[derive(Debug, Error)]
pub enum BenchError {
    /// The corpus has fewer tokens than a requested window.
    #[error("corpus has {available} tokens, window needs {length}")]
    CorpusTooSmall {
        /// Requested window length.
        length: usize,
        /// Tokens available.
        available: usize,
    },
    /// Bad sweep parameters.
    #[error("invalid sweep: {0}")]
    InvalidSpec(&'static str),
    /// Golden windows could not be decoded.
    #[error(transparent)]
    Codec(#[from] CodecError),
    /// An engine run failed.
    #[error(transparent)]
    Batch(#[from] BatchError),
    /// Repeated runs disagreed; timing must never change outputs.
    #[error("{engine} produced different tokens across runs at length {length}")]
    UnstableOutput {
        /// Engine label.
        engine: String,
        /// Window length.
        length: usize,
    },
}

/// One benchmark input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    /// Raw bytes handed to every engine.
    pub text: Vec<u8>,
    /// Reference tokens when the window was cut from a golden sequence.
    pub golden: Option<Vec<TokenId>>,
}

/// All windows of one length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSet {
    /// Length in tokens.
    pub length: usize,
    /// The sampled windows.
    pub windows: Vec<Window>,
}

/// Samples `samples_per_length` windows for each length.
///
/// With golden tokens, windows are cut in golden-token space and decoded to
/// text. Without, they are byte ranges of the corpus, which makes their
/// byte-level encoding exactly `length` tokens long.
pub fn make_windows(
    tokenizer: &Tokenizer,
    corpus: &[u8],
    golden_tokens: Option<&[TokenId]>,
    spec: &SweepSpec,
) -> Result<Vec<WindowSet>, BenchError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let available = golden_tokens.map_or(corpus.len(), <[TokenId]>::len);
    spec.lengths
        .iter()
        .map(|&length| {
            if available < length {
                return Err(BenchError::CorpusTooSmall { length, available });
            }
            let windows = (0..spec.samples_per_length)
                .map(|_| {
                    let start = rng.random_range(0..=available - length);
                    Ok(match golden_tokens {
                        Some(golden) => {
                            let ids = &golden[start..start + length];
                            Window {
                                text: tokenizer.decode(ids)?,
                                golden: Some(ids.to_vec()),
                            }
                        }
                        None => Window {
                            text: corpus[start..start + length].to_vec(),
                            golden: None,
                        },
                    })
                })
                .collect::<Result<_, BenchError>>()?;
            Ok(WindowSet { length, windows })
        })
        .collect()
}

/// One row of a sweep: an engine at one window length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    /// Engine label.
    pub engine: String,
    /// Window length in tokens.
    pub seq_len: usize,
    /// Mean end-to-end latency per window.
    pub mean_latency_ms: f64,
    /// Tokens per second, `seq_len / mean latency`.
    #[serde(rename = "throughput")]
    pub throughput_tokens_per_s: f64,
    /// Standard deviation of per-window latency.
    pub std_latency_ms: f64,
    /// Mean time inside the engine per window.
    pub mean_engine_ms: f64,
    /// Windows per run.
    pub samples: usize,
    /// Measured runs.
    pub runs: usize,
    /// Output ids summed over windows.
    pub output_tokens: usize,
    /// FNV-1a digest of all window outputs, to compare engines cheaply.
    pub output_digest: String,
    /// All windows matched their golden tokens.
    #[serde(default)]
    pub golden_match: Option<bool>,
    /// Diverging positions summed over windows.
    #[serde(default)]
    pub golden_divergences: Option<usize>,
}

fn fnv1a(ids: impl IntoIterator<Item = TokenId>, mut hash: u64) -> u64 {
    for id in ids {
        for byte in id.to_le_bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0100_0000_01b3);
        }
    }
    hash
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs every engine over every window set. Engines take turns within each
/// measured run, so slow drift in machine speed hits all of them alike.
/// Records come out engine-major, lengths ascending.
pub fn run_sweep(
    tokenizer: &Tokenizer,
    windows: &[WindowSet],
    engines: &[EngineKind],
    spec: &SweepSpec,
    config: &BatchConfig,
) -> Result<Vec<BenchRecord>, BenchError> {
    spec.validate()?;
    let mut per_set = Vec::with_capacity(windows.len());
    for set in windows {
        for _ in 0..spec.warmup_runs {
            for &engine in engines {
                for w in &set.windows {
                    tokenize_batch(tokenizer, &[&w.text], engine, config)?;
                }
            }
        }
        let mut latencies =
            vec![Vec::with_capacity(spec.measured_runs * set.windows.len()); engines.len()];
        let mut engine_ms = latencies.clone();
        let mut outputs: Vec<Option<Vec<Vec<TokenId>>>> = vec![None; engines.len()];
        for _ in 0..spec.measured_runs {
            for (e, &engine) in engines.iter().enumerate() {
                let mut run_outputs = Vec::with_capacity(set.windows.len());
                for w in &set.windows {
                    let t = Instant::now();
                    let result = tokenize_batch(tokenizer, &[&w.text], engine, config)?;
                    latencies[e].push(t.elapsed().as_secs_f64() * 1e3);
                    engine_ms[e].push(result.engine_time_ms);
                    run_outputs.extend(result.token_ids);
                }
                match &outputs[e] {
                    None => outputs[e] = Some(run_outputs),
                    Some(first) if *first != run_outputs => {
                        return Err(BenchError::UnstableOutput {
                            engine: engine.label().into(),
                            length: set.length,
                        })
                    }
                    Some(_) => {}
                }
            }
        }
        let records: Vec<BenchRecord> = engines
            .iter()
            .enumerate()
            .map(|(e, &engine)| {
                let outputs = outputs[e].take().unwrap_or_default();
                record(
                    engine,
                    set,
                    &latencies[e],
                    &engine_ms[e],
                    &outputs,
                    spec.measured_runs,
                )
            })
            .collect();
        per_set.push(records);
    }
    Ok((0..engines.len())
        .flat_map(|e| per_set.iter().map(move |records| records[e].clone()))
        .collect())
}

fn record(
    engine: EngineKind,
    set: &WindowSet,
    latencies: &[f64],
    engine_ms: &[f64],
    outputs: &[Vec<TokenId>],
    runs: usize,
) -> BenchRecord {
    let (golden_match, golden_divergences) = if set.windows.iter().all(|w| w.golden.is_some()) {
        let divergences: usize = set
            .windows
            .iter()
            .zip(outputs)
            .map(|(w, out)| {
                compare_golden(out, w.golden.as_deref().unwrap_or_default()).divergences
            })
            .sum();
        (Some(divergences == 0), Some(divergences))
    } else {
        (None, None)
    };

    let (mean_latency_ms, std_latency_ms) = mean_std(latencies);
    let mean_latency_ms = mean_latency_ms.max(f64::MIN_POSITIVE);
    BenchRecord {
        engine: engine.label().into(),
        seq_len: set.length,
        mean_latency_ms,
        throughput_tokens_per_s: set.length as f64 / (mean_latency_ms / 1e3),
        std_latency_ms,
        mean_engine_ms: mean_std(engine_ms).0,
        samples: set.windows.len(),
        runs,
        output_tokens: outputs.iter().map(Vec::len).sum(),
        output_digest: format!(
            "{:016x}",
            outputs
                .iter()
                .fold(0xcbf2_9ce4_8422_2325, |h, o| fnv1a(o.iter().copied(), h))
        ),
        golden_match,
        golden_divergences,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(SweepSpec::default().validate().is_ok());
        let bad = |f: fn(&mut SweepSpec)| {
            let mut s = SweepSpec::default();
            f(&mut s);
            s.validate().is_err()
        };
        assert!(bad(|s| s.lengths = vec![]));
        assert!(bad(|s| s.lengths = vec![0, 4]));
        assert!(bad(|s| s.lengths = vec![1024, 256]));
        assert!(bad(|s| s.samples_per_length = 0));
        assert!(bad(|s| s.measured_runs = 0));
        assert!(!bad(|s| s.warmup_runs = 0));
    }

    #[test]
    fn stats() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }
}
