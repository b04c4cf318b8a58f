//! Byte-level BPE with GPT-2's greedy merge semantics.
//!
//! The crate is `no_std` (it needs `alloc`) and holds only the pure parts of
//! the tokenizer:
//!
//! * [`byte_codec`]: the GPT-2 byte to symbol mapping and byte-level
//!   encoding/decoding against a [`Vocab`].
//! * [`merge_table`]: merge rule parsing and the packed-key open-addressing
//!   [`PackedPairTable`].
//! * [`engines`]: three implementations of the greedy merge loop (a
//!   sequential reference and two lane-model block engines) that produce
//!   identical token sequences.
//! * [`chunk`]: fixed-budget splitting of long byte-level sequences.
//!
//! File loading, batching across workers, benchmarking and the command line
//! live in the `lanebpe` crate.
#![no_std]
#![deny(missing_docs)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod byte_codec;
pub mod chunk;
pub mod engines;
pub mod merge_table;

pub use byte_codec::{
    build_byte_encoder, decode_tokens, encode_bytes, ByteEncoder, ByteTokenMap, CodecError, Vocab,
};
pub use chunk::{chunk_tokens, Chunk, ChunkError};
pub use engines::{
    compact_double_buffer, compact_scan, eval_pairs, run_block_engine, sequential_bpe, BlockConfig,
    BlockVariant, EngineError, EngineKind, PairCandidate, PassCounters, Worker,
};
pub use merge_table::{
    build_table, pack_key, pack_value, parse_merges, unpack_value, MergeRule, MergeValue,
    PackedPairTable, TableError,
};

/// A token id. GPT-2 vocabularies fit comfortably in 32 bits, which is what
/// the packed merge table relies on.
pub type TokenId = u32;
