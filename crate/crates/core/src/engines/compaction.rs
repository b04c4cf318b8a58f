//! The two compaction regimes. Both replace `src[best_pos]` with the merged
//! token, drop `src[best_pos + 1]` and shift the tail left by one; they only
//! differ in how lanes find their destination index.

use alloc::vec;
use alloc::vec::Vec;

use super::EngineError;
use crate::TokenId;

fn check_pos(len: usize, best_pos: usize) -> Result<(), EngineError> {
    if best_pos.checked_add(1).is_some_and(|next| next < len) {
        Ok(())
    } else {
        Err(EngineError::OutOfRange { best_pos, len })
    }
}

/// Work-efficient exclusive scan over a power-of-two length slice
/// (up-sweep then down-sweep), the shape a block-wide scan takes.
pub(super) fn exclusive_scan(data: &mut [u32]) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut stride = 1;
    while stride < n {
        let mut i = 2 * stride - 1;
        while i < n {
            data[i] += data[i - stride];
            i += 2 * stride;
        }
        stride *= 2;
    }
    data[n - 1] = 0;
    stride = n / 2;
    while stride >= 1 {
        let mut i = 2 * stride - 1;
        while i < n {
            let left = data[i - stride];
            data[i - stride] = data[i];
            data[i] += left;
            i += 2 * stride;
        }
        stride /= 2;
    }
}

/// Flag-and-scan compaction, one lane per position. `scratch` needs
/// `src.len().next_power_of_two()` entries. Returns the tokens written.
pub(super) fn scan_into(
    src: &[TokenId],
    dst: &mut [TokenId],
    best_pos: usize,
    new_token: TokenId,
    scratch: &mut [u32],
) -> u64 {
    let len = src.len();
    let removed = best_pos + 1;
    let flags = &mut scratch[..len.next_power_of_two()];
    for (idx, flag) in flags.iter_mut().enumerate() {
        *flag = u32::from(idx == removed);
    }
    exclusive_scan(flags);
    for idx in 0..len {
        if idx == removed {
            continue;
        }
        let val = if idx == best_pos { new_token } else { src[idx] };
        dst[idx - flags[idx] as usize] = val;
    }
    len as u64 - 1
}

/// Strided double-buffer compaction: lane `l` handles `l, l + lanes, ...`.
/// Returns the tokens written.
pub(super) fn double_buffer_into(
    src: &[TokenId],
    dst: &mut [TokenId],
    best_pos: usize,
    new_token: TokenId,
    lanes: usize,
) -> u64 {
    let len = src.len();
    for lane in 0..lanes.min(len) {
        let mut idx = lane;
        while idx < len {
            if idx != best_pos + 1 {
                let val = if idx == best_pos { new_token } else { src[idx] };
                let out = if idx <= best_pos { idx } else { idx - 1 };
                dst[out] = val;
            }
            idx += lanes;
        }
    }
    len as u64 - 1
}

/// Merges the pair at `best_pos` using a remove flag, an exclusive prefix sum
/// and a scatter to `idx - removed_before(idx)`.
pub fn compact_scan(
    tokens: &[TokenId],
    best_pos: usize,
    new_token: TokenId,
) -> Result<Vec<TokenId>, EngineError> {
    check_pos(tokens.len(), best_pos)?;
    let mut out = vec![0; tokens.len() - 1];
    let mut scratch = vec![0; tokens.len().next_power_of_two()];
    scan_into(tokens, &mut out, best_pos, new_token, &mut scratch);
    Ok(out)
}

/// Merges the pair at `best_pos` with `lane_count` lanes striding over the
/// input, each writing to `idx` or `idx - 1`.
pub fn compact_double_buffer(
    tokens: &[TokenId],
    best_pos: usize,
    new_token: TokenId,
    lane_count: usize,
) -> Result<Vec<TokenId>, EngineError> {
    check_pos(tokens.len(), best_pos)?;
    if lane_count == 0 {
        return Err(EngineError::InvalidConfig("lane_count must be at least 1"));
    }
    let mut out = vec![0; tokens.len() - 1];
    double_buffer_into(tokens, &mut out, best_pos, new_token, lane_count);
    Ok(out)
}
