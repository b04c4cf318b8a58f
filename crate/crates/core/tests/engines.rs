use lanebpe_core::engines::DEFAULT_LANE_COUNT;
use lanebpe_core::{
    build_table, compact_double_buffer, compact_scan, run_block_engine, sequential_bpe,
    BlockConfig, BlockVariant, EngineError, EngineKind, MergeRule, PackedPairTable, PairCandidate,
    Worker,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Brute-force greedy BPE: every pass walks the rule list in rank order and
/// merges the left-most occurrence of the first rule that matches anywhere.
/// Returns the output and the `(pos, rank)` merged by each pass.
fn oracle(tokens: &[u32], rules: &[MergeRule]) -> (Vec<u32>, Vec<(usize, u32)>) {
    let mut by_rank = rules.to_vec();
    by_rank.sort_by_key(|r| r.rank);
    let mut seq = tokens.to_vec();
    let mut trace = Vec::new();
    'pass: loop {
        for rule in &by_rank {
            if let Some(pos) = seq
                .windows(2)
                .position(|w| w[0] == rule.left && w[1] == rule.right)
            {
                seq[pos] = rule.new_token;
                seq.remove(pos + 1);
                trace.push((pos, rule.rank));
                continue 'pass;
            }
        }
        return (seq, trace);
    }
}

/// Random rules over a small alphabet so merges chain; merged ids are drawn
/// from the same alphabet, which also exercises odd tables where a merge
/// reproduces one of its inputs.
fn random_rules(rng: &mut ChaCha8Rng, alphabet: u32, count: usize) -> Vec<MergeRule> {
    let mut seen = std::collections::HashSet::new();
    let mut ranks: Vec<u32> = (0..count as u32).collect();
    for i in (1..ranks.len()).rev() {
        ranks.swap(i, rng.random_range(0..=i));
    }
    let mut rules = Vec::new();
    while rules.len() < count {
        let (left, right) = (rng.random_range(0..alphabet), rng.random_range(0..alphabet));
        if !seen.insert((left, right)) {
            continue;
        }
        rules.push(MergeRule {
            left,
            right,
            rank: ranks[rules.len()],
            new_token: rng.random_range(0..alphabet * 2),
        });
    }
    rules
}

fn random_tokens(rng: &mut ChaCha8Rng, alphabet: u32, max_len: usize) -> Vec<u32> {
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| rng.random_range(0..alphabet)).collect()
}

fn rule(left: u32, right: u32, rank: u32, new_token: u32) -> MergeRule {
    MergeRule {
        left,
        right,
        rank,
        new_token,
    }
}

fn assert_fixed_point(out: &[u32], table: &PackedPairTable) {
    for w in out.windows(2) {
        assert!(
            table.lookup(w[0], w[1]).is_none(),
            "pair {w:?} left unmerged"
        );
    }
}

#[test]
fn trivial_inputs_pass_through() {
    let table = build_table(&[rule(1, 2, 0, 3)]).unwrap();
    for input in [&[][..], &[1][..]] {
        let (out, c) = sequential_bpe(input, &table);
        assert_eq!((out.as_slice(), c.passes), (input, 0));
        for v in [BlockVariant::Baseline, BlockVariant::Optimized] {
            let (out, c) = run_block_engine(input, &table, BlockConfig::default(), v).unwrap();
            assert_eq!((out.as_slice(), c.passes), (input, 0));
        }
    }
}

#[test]
fn rank_order_decides() {
    // A B C with (A,B) rank 1 and (B,C) rank 0: B C merges first.
    let (a, b, c, x, y) = (1, 2, 3, 10, 11);
    let table = build_table(&[rule(a, b, 1, x), rule(b, c, 0, y)]).unwrap();
    let (out, counters) = sequential_bpe(&[a, b, c], &table);
    assert_eq!(out, [a, y]);
    assert_eq!(counters.passes, 1);
    for v in [BlockVariant::Baseline, BlockVariant::Optimized] {
        let (out, counters) =
            run_block_engine(&[a, b, c], &table, BlockConfig::default(), v).unwrap();
        assert_eq!(out, [a, y]);
        assert_eq!(counters.passes, 1);
    }
}

#[test]
fn overlapping_equal_pairs_merge_left_first() {
    let table = build_table(&[rule(5, 5, 0, 6)]).unwrap();
    assert_eq!(sequential_bpe(&[5, 5, 5], &table).0, [6, 5]);
    assert_eq!(sequential_bpe(&[5, 5, 5, 5], &table).0, [6, 6]);
    let cfg = BlockConfig::new(2, 16).unwrap();
    for v in [BlockVariant::Baseline, BlockVariant::Optimized] {
        assert_eq!(
            run_block_engine(&[5, 5, 5], &table, cfg, v).unwrap().0,
            [6, 5]
        );
    }
}

#[test]
fn too_long_for_block() {
    let table = build_table(&[]).unwrap();
    let cfg = BlockConfig::new(4, 8).unwrap();
    let err = run_block_engine(&[0; 9], &table, cfg, BlockVariant::Optimized).unwrap_err();
    assert_eq!(err, EngineError::SequenceTooLong { len: 9, max: 8 });
    assert!(run_block_engine(&[0; 8], &table, cfg, BlockVariant::Optimized).is_ok());
}

#[test]
fn invalid_block_configs() {
    assert!(BlockConfig::new(0, 16).is_err());
    assert!(BlockConfig::new(4, 1).is_err());
    assert!(BlockConfig::new(1, 2).is_ok());
    let d = BlockConfig::default();
    assert_eq!(
        (d.lane_count(), d.max_seq_len()),
        (DEFAULT_LANE_COUNT, 8192)
    );
}

#[test]
fn engines_match_oracle_on_random_tables() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for case in 0..400 {
        let alphabet = rng.random_range(2..12);
        let count = rng.random_range(0..(alphabet * alphabet) as usize);
        let rules = random_rules(&mut rng, alphabet, count);
        let table = build_table(&rules).unwrap();
        let tokens = random_tokens(&mut rng, alphabet, 300);
        let (want, want_trace) = oracle(&tokens, &rules);

        let (seq, sc) = sequential_bpe(&tokens, &table);
        assert_eq!(seq, want, "case {case}: sequential");
        assert_eq!(sc.passes as usize, tokens.len() - want.len());

        let lanes = rng.random_range(1..40);
        let cfg = BlockConfig::new(lanes, 512).unwrap();
        for v in [BlockVariant::Baseline, BlockVariant::Optimized] {
            let mut trace = Vec::new();
            let (out, c) = Worker::new(cfg)
                .run_block_traced(v, &tokens, &table, |p: PairCandidate| {
                    trace.push((p.pos, p.rank))
                })
                .unwrap();
            assert_eq!(out, want, "case {case}: {v:?} lanes={lanes}");
            assert_eq!(trace, want_trace, "case {case}: {v:?} pass order");
            assert_eq!(c.passes as usize, tokens.len() - out.len());
            assert_fixed_point(&out, &table);
        }
    }
}

#[test]
fn lane_count_does_not_change_anything_observable() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let rules = random_rules(&mut rng, 8, 40);
        let table = build_table(&rules).unwrap();
        let tokens = random_tokens(&mut rng, 8, 700);
        let runs: Vec<_> = [1, 2, 7, 32, 256, 1000]
            .iter()
            .flat_map(|&lanes| {
                let cfg = BlockConfig::new(lanes, 1024).unwrap();
                [BlockVariant::Baseline, BlockVariant::Optimized].map(|v| {
                    let (out, c) = run_block_engine(&tokens, &table, cfg, v).unwrap();
                    (out, c.passes, c.lookups, c.compaction_moves)
                })
            })
            .collect();
        assert!(runs.windows(2).all(|w| w[0] == w[1]));
    }
}

#[test]
fn counters_account_for_work() {
    let table = build_table(&[rule(1, 2, 0, 3), rule(3, 3, 1, 4)]).unwrap();
    let tokens = [1, 2, 1, 2, 9];
    // Passes: [3,1,2,9] -> [3,3,9] -> [4,9].
    let cfg = BlockConfig::new(2, 8).unwrap();
    let (out, c) = run_block_engine(&tokens, &table, cfg, BlockVariant::Optimized).unwrap();
    assert_eq!(out, [4, 9]);
    assert_eq!(c.passes, 3);
    // Probes per pass are len - 1: 4 + 3 + 2 + a final 1 that finds nothing.
    assert_eq!(c.lookups, 4 + 3 + 2 + 1);
    assert_eq!(c.compaction_moves, 4 + 3 + 2);
    // Two token buffers plus the lane arrays.
    assert_eq!(c.buffer_allocations, 4);
    let (_, c) = run_block_engine(&tokens, &table, cfg, BlockVariant::Baseline).unwrap();
    assert_eq!(c.buffer_allocations, 5);
}

#[test]
fn pooled_worker_stops_allocating() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rules = random_rules(&mut rng, 6, 20);
    let table = build_table(&rules).unwrap();
    let mut worker = Worker::new(BlockConfig::new(16, 256).unwrap());
    for kind in EngineKind::ALL {
        let tokens = random_tokens(&mut rng, 6, 200);
        let long: Vec<u32> = tokens.iter().chain(&tokens).copied().take(256).collect();
        worker.run(kind, &long, &table).unwrap();
        let (_, c) = worker.run(kind, &tokens, &table).unwrap();
        assert_eq!(c.buffer_allocations, 0, "{kind}");
    }
}

#[test]
fn armed_fault_diverges_once() {
    let table = build_table(&[rule(1, 2, 0, 7)]).unwrap();
    let tokens = [1, 2, 3, 4, 1, 2];
    let mut worker = Worker::new(BlockConfig::new(4, 16).unwrap());
    let (good, _) = worker.run(EngineKind::Optimized, &tokens, &table).unwrap();
    worker.arm_fault();
    let (bad, _) = worker.run(EngineKind::Optimized, &tokens, &table).unwrap();
    assert_ne!(good, bad);
    assert_eq!(good.len(), bad.len());
    let (again, _) = worker.run(EngineKind::Optimized, &tokens, &table).unwrap();
    assert_eq!(again, good);
}

#[test]
fn compaction_regimes_agree_on_random_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..2000 {
        let lanes = rng.random_range(2..=256);
        let len = rng.random_range(2..=lanes);
        let tokens: Vec<u32> = (0..len).map(|_| rng.random()).collect();
        let pos = rng.random_range(0..len - 1);
        let new = rng.random();
        let scan = compact_scan(&tokens, pos, new).unwrap();
        for l in [1, 2, 32, 256, lanes] {
            assert_eq!(compact_double_buffer(&tokens, pos, new, l).unwrap(), scan);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn three_engines_agree(
        seed in any::<u64>(),
        lanes in 1usize..64,
        tokens in proptest::collection::vec(0u32..10, 0..400),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rules = random_rules(&mut rng, 10, 60);
        let table = build_table(&rules).unwrap();
        let (seq, sc) = sequential_bpe(&tokens, &table);
        prop_assert_eq!(sc.passes as usize, tokens.len() - seq.len());
        let cfg = BlockConfig::new(lanes, 512).unwrap();
        for v in [BlockVariant::Baseline, BlockVariant::Optimized] {
            let (out, c) = run_block_engine(&tokens, &table, cfg, v).unwrap();
            prop_assert_eq!(&out, &seq);
            prop_assert_eq!(c.passes, sc.passes);
        }
    }
}
