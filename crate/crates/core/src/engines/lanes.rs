use alloc::vec;

use super::{BlockConfig, PairCandidate};
use crate::merge_table::{pack_key, unpack_value, PackedPairTable};
use crate::TokenId;

/// Lane result meaning "no mergeable pair seen".
pub(super) const NO_CANDIDATE: u64 = u64::MAX;

/// Orders candidates by rank, then position, as a single integer.
#[inline]
fn candidate_key(rank: u32, pos: usize) -> u64 {
    (u64::from(rank) << 32) | pos as u64
}

/// One pass of pair evaluation: every lane scans its strided positions and
/// keeps its best pair, then a tree reduction picks the block-wide winner.
///
/// `lane_best` and `lane_new` must hold at least `lanes` entries. Returns the
/// winner and the number of table probes issued.
pub(super) fn eval_lanes(
    tokens: &[TokenId],
    table: &PackedPairTable,
    lanes: usize,
    lane_best: &mut [u64],
    lane_new: &mut [TokenId],
) -> (Option<PairCandidate>, u64) {
    let pairs = tokens.len().saturating_sub(1);
    if pairs == 0 {
        return (None, 0);
    }
    let active = lanes.min(pairs);
    for lane in 0..active {
        let mut best = NO_CANDIDATE;
        let mut best_new = 0;
        let mut i = lane;
        while i < pairs {
            if let Some(value) = table.lookup_packed(pack_key(tokens[i], tokens[i + 1])) {
                let v = unpack_value(value);
                let key = candidate_key(v.rank, i);
                if key < best {
                    best = key;
                    best_new = v.new_token;
                }
            }
            i += lanes;
        }
        lane_best[lane] = best;
        lane_new[lane] = best_new;
    }

    // Tree argmin: fold the upper half onto the lower half until one remains.
    let mut width = active;
    while width > 1 {
        let half = width.div_ceil(2);
        for lane in 0..width / 2 {
            let other = lane + half;
            if lane_best[other] < lane_best[lane] {
                lane_best[lane] = lane_best[other];
                lane_new[lane] = lane_new[other];
            }
        }
        width = half;
    }

    let winner = (lane_best[0] != NO_CANDIDATE).then(|| PairCandidate {
        pos: (lane_best[0] & 0xFFFF_FFFF) as usize,
        rank: (lane_best[0] >> 32) as u32,
        new_token: lane_new[0],
    });
    (winner, pairs as u64)
}

/// Finds the lowest-rank adjacent pair in `tokens`, left-most on ties, using
/// the lane model of `config`. The answer does not depend on the lane count.
pub fn eval_pairs(
    tokens: &[TokenId],
    table: &PackedPairTable,
    config: BlockConfig,
) -> Option<PairCandidate> {
    let lanes = config.lane_count();
    let mut best = vec![NO_CANDIDATE; lanes];
    let mut new = vec![0; lanes];
    eval_lanes(tokens, table, lanes, &mut best, &mut new).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::merge_table::{build_table, MergeRule};
    use alloc::vec::Vec;

    fn table(rules: &[(u32, u32, u32, u32)]) -> PackedPairTable {
        let rules: Vec<_> = rules
            .iter()
            .map(|&(left, right, rank, new_token)| MergeRule {
                left,
                right,
                rank,
                new_token,
            })
            .collect();
        build_table(&rules).unwrap()
    }

    fn cfg(lanes: usize) -> BlockConfig {
        BlockConfig::new(lanes, 64).unwrap()
    }

    #[test]
    fn unique_minimum() {
        let t = table(&[(1, 2, 5, 10), (2, 3, 2, 11)]);
        let c = eval_pairs(&[1, 2, 3], &t, cfg(4)).unwrap();
        assert_eq!(
            c,
            PairCandidate {
                pos: 1,
                rank: 2,
                new_token: 11
            }
        );
    }

    #[test]
    fn left_most_on_ties() {
        let t = table(&[(1, 2, 3, 10)]);
        for lanes in [1, 2, 3, 4, 256] {
            let c = eval_pairs(&[1, 2, 1, 2], &t, cfg(lanes)).unwrap();
            assert_eq!(c.pos, 0);
            assert_eq!(c.rank, 3);
        }
    }

    #[test]
    fn no_hits_and_short_inputs() {
        let t = table(&[(1, 2, 0, 10)]);
        assert_eq!(eval_pairs(&[2, 1, 3], &t, cfg(2)), None);
        assert_eq!(eval_pairs(&[1], &t, cfg(2)), None);
        assert_eq!(eval_pairs(&[], &t, cfg(2)), None);
    }

    #[test]
    fn winner_in_late_lane() {
        // Only position 6 matches; with 4 lanes it belongs to lane 2.
        let t = table(&[(7, 8, 9, 99), (1, 1, 10, 50)]);
        let tokens = [1, 1, 0, 0, 0, 0, 7, 8, 1, 1];
        for lanes in 1..=12 {
            let c = eval_pairs(&tokens, &t, cfg(lanes)).unwrap();
            assert_eq!((c.pos, c.rank, c.new_token), (6, 9, 99), "lanes={lanes}");
        }
    }

    #[test]
    fn probe_count_is_pairs() {
        let t = table(&[]);
        let mut best = [0u64; 3];
        let mut new = [0u32; 3];
        let (c, probes) = eval_lanes(&[1, 2, 3, 4, 5], &t, 3, &mut best, &mut new);
        assert_eq!((c, probes), (None, 4));
    }
}
