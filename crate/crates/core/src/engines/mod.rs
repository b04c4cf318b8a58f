//! Greedy merge engines.
//!
//! All engines apply the same rule: while some adjacent pair is in the merge
//! table, merge the pair with the lowest rank, taking the left-most one on
//! ties. Exactly one pair is merged per pass, so the number of passes equals
//! the number of tokens removed.
//!
//! * [`sequential_bpe`] is the CPU reference: a priority queue over a linked
//!   list of tokens.
//! * The block engines run a deterministic lane model of one GPU block per
//!   sequence. Each pass every lane scans positions `lane, lane + lanes, ...`
//!   for its best local pair ([`eval_pairs`]), the lane results are reduced
//!   to the block-wide winner, and the sequence is compacted from one working
//!   buffer into the other. [`BlockVariant::Baseline`] switches to a
//!   prefix-sum compaction ([`compact_scan`]) once the sequence fits in one
//!   lane per token; [`BlockVariant::Optimized`] always uses the strided
//!   double-buffer compaction ([`compact_double_buffer`]).

mod block;
mod compaction;
mod lanes;
mod sequential;
mod worker;

use core::fmt;
use core::ops::AddAssign;
use core::str::FromStr;

use thiserror::Error;

use crate::merge_table::PackedPairTable;
use crate::TokenId;

pub use compaction::{compact_double_buffer, compact_scan};
pub use lanes::eval_pairs;
pub use worker::Worker;

/// Default number of lanes per block.
pub const DEFAULT_LANE_COUNT: usize = 256;
/// Default per-block token capacity.
pub const DEFAULT_MAX_SEQ_LEN: usize = 8192;

/// Engine failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    /// The sequence does not fit in one block; chunk it first.
    #[error("sequence of {len} tokens exceeds the block capacity of {max}")]
    SequenceTooLong {
        /// Input length.
        len: usize,
        /// Configured `max_seq_len`.
        max: usize,
    },
    /// A merge position with no right neighbour.
    #[error("merge position {best_pos} is out of range for length {len}")]
    OutOfRange {
        /// Requested position.
        best_pos: usize,
        /// Sequence length.
        len: usize,
    },
    /// Block parameters outside their valid range.
    #[error("invalid block config: {0}")]
    InvalidConfig(&'static str),
}

/// Shape of one block: how many lanes cooperate and how many tokens fit in
/// each of its two working buffers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockConfig {
    lane_count: usize,
    max_seq_len: usize,
}

impl BlockConfig {
    /// Requires `lane_count >= 1` and `2 <= max_seq_len <= u32::MAX`.
    pub fn new(lane_count: usize, max_seq_len: usize) -> Result<Self, EngineError> {
        if lane_count == 0 {
            return Err(EngineError::InvalidConfig("lane_count must be at least 1"));
        }
        if max_seq_len < 2 {
            return Err(EngineError::InvalidConfig("max_seq_len must be at least 2"));
        }
        if u32::try_from(max_seq_len).is_err() {
            return Err(EngineError::InvalidConfig(
                "max_seq_len must fit in 32 bits",
            ));
        }
        Ok(BlockConfig {
            lane_count,
            max_seq_len,
        })
    }

    /// Lanes per block.
    pub fn lane_count(&self) -> usize {
        self.lane_count
    }

    /// Tokens per working buffer.
    pub fn max_seq_len(&self) -> usize {
        self.max_seq_len
    }
}

impl Default for BlockConfig {
    fn default() -> Self {
        BlockConfig {
            lane_count: DEFAULT_LANE_COUNT,
            max_seq_len: DEFAULT_MAX_SEQ_LEN,
        }
    }
}

/// The pair a pass decided to merge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairCandidate {
    /// Index of the left token.
    pub pos: usize,
    /// Merge rank of the pair.
    pub rank: u32,
    /// Token the pair merges into.
    pub new_token: TokenId,
}

/// Work counters for one or more engine runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct PassCounters {
    /// Merge passes; equals tokens in minus tokens out.
    pub passes: u64,
    /// Merge-table probes issued.
    pub lookups: u64,
    /// Tokens written by compaction.
    pub compaction_moves: u64,
    /// Working buffers that had to be freshly allocated.
    pub buffer_allocations: u64,
}

impl AddAssign for PassCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.passes += rhs.passes;
        self.lookups += rhs.lookups;
        self.compaction_moves += rhs.compaction_moves;
        self.buffer_allocations += rhs.buffer_allocations;
    }
}

/// Which block kernel to model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockVariant {
    /// Prefix-sum compaction for short sequences, strided otherwise.
    Baseline,
    /// Strided double-buffer compaction at every length.
    Optimized,
}

/// Any of the three engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EngineKind {
    /// Priority-queue CPU reference.
    Sequential,
    /// Baseline block engine.
    Baseline,
    /// Optimized block engine.
    Optimized,
}

impl EngineKind {
    /// All engines, reference first.
    pub const ALL: [EngineKind; 3] = [
        EngineKind::Sequential,
        EngineKind::Baseline,
        EngineKind::Optimized,
    ];

    /// Lower-case name used on the command line and in reports.
    pub fn label(self) -> &'static str {
        match self {
            EngineKind::Sequential => "sequential",
            EngineKind::Baseline => "baseline",
            EngineKind::Optimized => "optimized",
        }
    }

    /// The block variant, or `None` for the sequential reference.
    pub fn block_variant(self) -> Option<BlockVariant> {
        match self {
            EngineKind::Sequential => None,
            EngineKind::Baseline => Some(BlockVariant::Baseline),
            EngineKind::Optimized => Some(BlockVariant::Optimized),
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Unrecognised engine name.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown engine {0:?} (expected sequential, baseline or optimized)")]
pub struct ParseEngineKindError(pub alloc::string::String);

impl FromStr for EngineKind {
    type Err = ParseEngineKindError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sequential" => Ok(EngineKind::Sequential),
            "baseline" => Ok(EngineKind::Baseline),
            "optimized" => Ok(EngineKind::Optimized),
            other => Err(ParseEngineKindError(other.into())),
        }
    }
}

/// Runs the sequential reference to its fixed point.
pub fn sequential_bpe(
    tokens: &[TokenId],
    table: &PackedPairTable,
) -> (alloc::vec::Vec<TokenId>, PassCounters) {
    Worker::new(BlockConfig::default()).run_sequential(tokens, table)
}

/// Runs one block engine with fresh working buffers.
pub fn run_block_engine(
    tokens: &[TokenId],
    table: &PackedPairTable,
    config: BlockConfig,
    variant: BlockVariant,
) -> Result<(alloc::vec::Vec<TokenId>, PassCounters), EngineError> {
    Worker::new(config).run_block(variant, tokens, table)
}
