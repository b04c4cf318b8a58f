use alloc::vec::Vec;
use core::cmp::Reverse;

use super::worker::BufferPool;
use super::PassCounters;
use crate::merge_table::PackedPairTable;
use crate::TokenId;

const NIL: u32 = u32::MAX;
const DEAD: u32 = u32::MAX - 1;

/// Greedy merge over a doubly linked list with a min-heap of candidate
/// pairs keyed by `(rank, original index)`. Merged-away nodes keep their
/// relative order, so the original index orders candidates left to right.
///
/// Heap entries are never removed eagerly; an entry is acted on only if the
/// pair currently at its position still has the recorded tokens.
pub(super) fn run(
    pool: &mut BufferPool,
    tokens: &[TokenId],
    table: &PackedPairTable,
) -> (Vec<TokenId>, PassCounters) {
    let mut counters = PassCounters::default();
    let n = tokens.len();
    if n < 2 {
        return (tokens.to_vec(), counters);
    }
    assert!(
        n < DEAD as usize,
        "sequence too long for 32-bit node indices"
    );

    let mut tok = pool.take_u32(n, &mut counters);
    let mut next = pool.take_u32(n, &mut counters);
    let mut prev = pool.take_u32(n, &mut counters);
    let mut heap = pool.take_heap(n, &mut counters);

    tok.copy_from_slice(tokens);
    for i in 0..n {
        next[i] = if i + 1 < n { i as u32 + 1 } else { NIL };
        prev[i] = if i > 0 { i as u32 - 1 } else { NIL };
    }
    for i in 0..n - 1 {
        if let Some(v) = table.lookup(tok[i], tok[i + 1]) {
            heap.push(Reverse((v.rank, i as u32, tok[i], tok[i + 1], v.new_token)));
        }
    }
    counters.lookups += n as u64 - 1;

    while let Some(Reverse((_, pos, left, right, new_token))) = heap.pop() {
        let p = pos as usize;
        if prev[p] == DEAD || next[p] == NIL {
            continue;
        }
        let q = next[p] as usize;
        if tok[p] != left || tok[q] != right {
            continue;
        }

        tok[p] = new_token;
        let r = next[q];
        next[p] = r;
        if r != NIL {
            prev[r as usize] = pos;
        }
        prev[q] = DEAD;
        counters.passes += 1;

        let l = prev[p];
        if l != NIL {
            counters.lookups += 1;
            if let Some(v) = table.lookup(tok[l as usize], tok[p]) {
                heap.push(Reverse((v.rank, l, tok[l as usize], tok[p], v.new_token)));
            }
        }
        if r != NIL {
            counters.lookups += 1;
            if let Some(v) = table.lookup(tok[p], tok[r as usize]) {
                heap.push(Reverse((v.rank, pos, tok[p], tok[r as usize], v.new_token)));
            }
        }
    }

    // Node 0 is never merged away: merges always keep the left node.
    let mut out = Vec::with_capacity(n - counters.passes as usize);
    let mut i = 0u32;
    while i != NIL {
        out.push(tok[i as usize]);
        i = next[i as usize];
    }
    counters.compaction_moves += out.len() as u64;

    pool.put_heap(heap);
    pool.put_u32(prev);
    pool.put_u32(next);
    pool.put_u32(tok);
    (out, counters)
}
