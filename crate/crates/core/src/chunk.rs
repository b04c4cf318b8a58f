//! Fixed-budget chunking of byte-level sequences.
//!
//! Chunks are cut at fixed offsets, so no merge ever spans a boundary. The
//! merged output of a chunked sequence can therefore differ from merging the
//! whole sequence at once near the cuts; guarantees hold per chunk.

use alloc::vec::Vec;

use thiserror::Error;

use crate::TokenId;

/// Chunking errors.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChunkError {
    /// Chunk budgets below two tokens leave nothing to merge.
    #[error("chunk budget {0} is below the minimum of 2")]
    InvalidBudget(usize),
}

/// A slice of one input's byte-level ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chunk<'a> {
    /// Index of the input the chunk came from.
    pub source_index: usize,
    /// Position of the chunk within that input.
    pub chunk_index: usize,
    /// The chunk's ids, at most the budget.
    pub tokens: &'a [TokenId],
}

/// Splits `tokens` into `ceil(len / budget)` chunks; all but the last are
/// full. Empty input gives no chunks.
pub fn chunk_tokens(
    source_index: usize,
    tokens: &[TokenId],
    chunk_budget: usize,
) -> Result<Vec<Chunk<'_>>, ChunkError> {
    if chunk_budget < 2 {
        return Err(ChunkError::InvalidBudget(chunk_budget));
    }
    Ok(tokens
        .chunks(chunk_budget)
        .enumerate()
        .map(|(chunk_index, tokens)| Chunk {
            source_index,
            chunk_index,
            tokens,
        })
        .collect())
}
