use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Reverse;

use super::{block, sequential};
use super::{BlockConfig, BlockVariant, EngineError, EngineKind, PairCandidate, PassCounters};
use crate::merge_table::PackedPairTable;
use crate::TokenId;

/// `(rank, pos, left, right, new_token)`, ordered by rank then position.
pub(super) type HeapEntry = Reverse<(u32, u32, TokenId, TokenId, TokenId)>;

/// Recycled working buffers. Taking a buffer only allocates (and counts an
/// allocation) when nothing in the pool is large enough.
#[derive(Debug, Default)]
pub(super) struct BufferPool {
    u32s: Vec<Vec<u32>>,
    u64s: Vec<Vec<u64>>,
    heap: Option<BinaryHeap<HeapEntry>>,
}

fn take_best_fit<T: Copy + Default>(
    pool: &mut Vec<Vec<T>>,
    len: usize,
    counters: &mut PassCounters,
) -> Vec<T> {
    let fit = pool
        .iter()
        .enumerate()
        .filter(|(_, v)| v.capacity() >= len)
        .min_by_key(|(_, v)| v.capacity())
        .map(|(i, _)| i);
    let mut buf = match fit {
        Some(i) => pool.swap_remove(i),
        None => {
            counters.buffer_allocations += 1;
            Vec::with_capacity(len)
        }
    };
    buf.clear();
    buf.resize(len, T::default());
    buf
}

impl BufferPool {
    pub(super) fn take_u32(&mut self, len: usize, counters: &mut PassCounters) -> Vec<u32> {
        take_best_fit(&mut self.u32s, len, counters)
    }

    pub(super) fn take_u64(&mut self, len: usize, counters: &mut PassCounters) -> Vec<u64> {
        take_best_fit(&mut self.u64s, len, counters)
    }

    pub(super) fn put_u32(&mut self, buf: Vec<u32>) {
        if buf.capacity() > 0 {
            self.u32s.push(buf);
        }
    }

    pub(super) fn put_u64(&mut self, buf: Vec<u64>) {
        if buf.capacity() > 0 {
            self.u64s.push(buf);
        }
    }

    pub(super) fn take_heap(
        &mut self,
        len: usize,
        counters: &mut PassCounters,
    ) -> BinaryHeap<HeapEntry> {
        match self.heap.take() {
            Some(mut heap) if heap.capacity() >= len => {
                heap.clear();
                heap
            }
            _ => {
                counters.buffer_allocations += 1;
                BinaryHeap::with_capacity(len)
            }
        }
    }

    pub(super) fn put_heap(&mut self, heap: BinaryHeap<HeapEntry>) {
        self.heap = Some(heap);
    }
}

/// One execution context: a block shape plus the working buffers reused
/// across runs. A worker is not shared; give each thread its own.
#[derive(Debug)]
pub struct Worker {
    config: BlockConfig,
    pool: BufferPool,
    fault_armed: bool,
}

impl Worker {
    /// A worker with an empty buffer pool.
    pub fn new(config: BlockConfig) -> Self {
        Worker {
            config,
            pool: BufferPool::default(),
            fault_armed: false,
        }
    }

    /// The block shape used by the block engines.
    pub fn config(&self) -> BlockConfig {
        self.config
    }

    /// Runs `kind` on `tokens`. The sequential reference ignores the block
    /// capacity; block engines reject sequences longer than `max_seq_len`.
    pub fn run(
        &mut self,
        kind: EngineKind,
        tokens: &[TokenId],
        table: &PackedPairTable,
    ) -> Result<(Vec<TokenId>, PassCounters), EngineError> {
        match kind.block_variant() {
            None => Ok(self.run_sequential(tokens, table)),
            Some(variant) => self.run_block(variant, tokens, table),
        }
    }

    /// Runs the sequential reference.
    pub fn run_sequential(
        &mut self,
        tokens: &[TokenId],
        table: &PackedPairTable,
    ) -> (Vec<TokenId>, PassCounters) {
        sequential::run(&mut self.pool, tokens, table)
    }

    /// Runs a block engine.
    pub fn run_block(
        &mut self,
        variant: BlockVariant,
        tokens: &[TokenId],
        table: &PackedPairTable,
    ) -> Result<(Vec<TokenId>, PassCounters), EngineError> {
        self.run_block_traced(variant, tokens, table, |_| {})
    }

    /// Runs a block engine and reports every pass's winning pair, in order.
    pub fn run_block_traced(
        &mut self,
        variant: BlockVariant,
        tokens: &[TokenId],
        table: &PackedPairTable,
        mut trace: impl FnMut(PairCandidate),
    ) -> Result<(Vec<TokenId>, PassCounters), EngineError> {
        block::run(
            &mut self.pool,
            self.config,
            &mut self.fault_armed,
            variant,
            tokens,
            table,
            &mut trace,
        )
    }

    /// Test hook: corrupts one destination index in the next block-engine
    /// compaction where doing so changes the output.
    #[doc(hidden)]
    pub fn arm_fault(&mut self) {
        self.fault_armed = true;
    }
}
