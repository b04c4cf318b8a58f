use alloc::vec::Vec;
use core::mem;

use super::compaction::{double_buffer_into, scan_into};
use super::lanes::eval_lanes;
use super::worker::BufferPool;
use super::{BlockConfig, BlockVariant, EngineError, PairCandidate, PassCounters};
use crate::merge_table::PackedPairTable;
use crate::TokenId;

/// The block merge loop: evaluate pairs, stop if none match, compact into
/// the other buffer, swap, repeat.
pub(super) fn run(
    pool: &mut BufferPool,
    config: BlockConfig,
    fault_armed: &mut bool,
    variant: BlockVariant,
    tokens: &[TokenId],
    table: &PackedPairTable,
    trace: &mut dyn FnMut(PairCandidate),
) -> Result<(Vec<TokenId>, PassCounters), EngineError> {
    let n = tokens.len();
    let max = config.max_seq_len();
    if n > max {
        return Err(EngineError::SequenceTooLong { len: n, max });
    }
    let mut counters = PassCounters::default();
    if n < 2 {
        return Ok((tokens.to_vec(), counters));
    }

    let lanes = config.lane_count();
    // No pass ever has more than max - 1 pairs, so wider lane arrays idle.
    let lane_slots = lanes.min(max);
    let mut cur = pool.take_u32(max, &mut counters);
    let mut nxt = pool.take_u32(max, &mut counters);
    let mut lane_best = pool.take_u64(lane_slots, &mut counters);
    let mut lane_new = pool.take_u32(lane_slots, &mut counters);
    let mut scan = match variant {
        BlockVariant::Baseline => pool.take_u32(lane_slots.next_power_of_two(), &mut counters),
        BlockVariant::Optimized => Vec::new(),
    };

    cur[..n].copy_from_slice(tokens);
    let mut len = n;
    while len >= 2 {
        let (winner, probes) = eval_lanes(&cur[..len], table, lanes, &mut lane_best, &mut lane_new);
        counters.lookups += probes;
        let Some(best) = winner else { break };
        trace(best);

        let src = &cur[..len];
        let dst = &mut nxt[..len - 1];
        counters.compaction_moves += match variant {
            BlockVariant::Baseline if len <= lanes => {
                scan_into(src, dst, best.pos, best.new_token, &mut scan)
            }
            _ => double_buffer_into(src, dst, best.pos, best.new_token, lanes),
        };
        if *fault_armed && best.pos + 2 < len && src[best.pos + 1] != src[best.pos + 2] {
            // Write the dropped token where its right neighbour belongs.
            dst[best.pos + 1] = src[best.pos + 1];
            *fault_armed = false;
        }

        mem::swap(&mut cur, &mut nxt);
        len -= 1;
        counters.passes += 1;
    }
    let out = cur[..len].to_vec();

    pool.put_u32(scan);
    pool.put_u32(lane_new);
    pool.put_u64(lane_best);
    pool.put_u32(nxt);
    pool.put_u32(cur);
    Ok((out, counters))
}
