//! Merge rules and the packed pair table every engine probes.
//!
//! A pair `(a, b)` is packed as `key = (a << 32) | b` and its rule as
//! `value = (new_token << 32) | rank`, so one 64-bit probe answers both "is
//! this pair mergeable" and "with which priority and into what". The table is
//! open addressing with linear probing, sized to a power of two at most half
//! full.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::str;

use thiserror::Error;

use crate::byte_codec::Vocab;
use crate::TokenId;

/// Key stored in unused slots. It equals `pack_key(u32::MAX, u32::MAX)`,
/// which is rejected on insert.
pub const EMPTY_KEY: u64 = u64::MAX;

/// Errors from merge parsing and table construction.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    /// A merge line without exactly two space-separated fields.
    #[error("line {line}: expected two space-separated symbols")]
    MalformedLine {
        /// 1-based line number in the merges file.
        line: usize,
    },
    /// A merge line that is not valid UTF-8.
    #[error("line {line}: not valid UTF-8")]
    InvalidUtf8 {
        /// 1-based line number in the merges file.
        line: usize,
    },
    /// A symbol (or the merged symbol) has no vocabulary id.
    #[error("line {line}: symbol {symbol:?} is not in the vocabulary")]
    UnknownSymbol {
        /// 1-based line number in the merges file.
        line: usize,
        /// The missing symbol.
        symbol: String,
    },
    /// More merge rules than fit in a 32-bit rank.
    #[error("too many merge rules for 32-bit ranks")]
    RankOverflow,
    /// The same pair was given two rules.
    #[error("pair ({left}, {right}) appears at ranks {first_rank} and {rank}")]
    DuplicatePair {
        /// Left token.
        left: TokenId,
        /// Right token.
        right: TokenId,
        /// Rank of the first occurrence.
        first_rank: u32,
        /// Rank of the repeated occurrence.
        rank: u32,
    },
    /// The pair `(u32::MAX, u32::MAX)` packs to the empty-slot sentinel.
    #[error("pair (0xffffffff, 0xffffffff) collides with the empty-slot key")]
    ReservedKey,
}

/// One merge rule: `left right -> new_token`, applied in `rank` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MergeRule {
    /// Left token id.
    pub left: TokenId,
    /// Right token id.
    pub right: TokenId,
    /// 0-based position among the merge lines; lower merges first.
    pub rank: u32,
    /// Id of the concatenated symbol.
    pub new_token: TokenId,
}

/// The decoded value half of a table entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MergeValue {
    /// Id of the merged token.
    pub new_token: TokenId,
    /// Merge rank.
    pub rank: u32,
}

/// `(a << 32) | b`.
#[inline]
pub const fn pack_key(a: TokenId, b: TokenId) -> u64 {
    ((a as u64) << 32) | b as u64
}

/// `(new_token << 32) | rank`.
#[inline]
pub const fn pack_value(new_token: TokenId, rank: u32) -> u64 {
    ((new_token as u64) << 32) | rank as u64
}

/// Inverse of [`pack_value`].
#[inline]
pub const fn unpack_value(value: u64) -> MergeValue {
    MergeValue {
        new_token: (value >> 32) as u32,
        rank: value as u32,
    }
}

/// Parses GPT-2 `merges.txt` content.
///
/// The first line is a header and skipped iff it starts with `#`. Blank lines
/// are ignored. Every other line must be `symA symB`; ranks count merge lines
/// from 0.
pub fn parse_merges(merges_text: &[u8], vocab: &Vocab) -> Result<Vec<MergeRule>, TableError> {
    let mut rules = Vec::new();
    let mut merged = String::new();
    for (idx, raw) in merges_text.split(|&b| b == b'\n').enumerate() {
        let line_no = idx + 1;
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        if idx == 0 && raw.first() == Some(&b'#') {
            continue;
        }
        if raw.is_empty() {
            continue;
        }
        let line = str::from_utf8(raw).map_err(|_| TableError::InvalidUtf8 { line: line_no })?;
        let mut fields = line.split(' ');
        let (left, right) = match (fields.next(), fields.next(), fields.next()) {
            (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => (l, r),
            _ => return Err(TableError::MalformedLine { line: line_no }),
        };
        let resolve = |symbol: &str| {
            vocab.id(symbol).ok_or_else(|| TableError::UnknownSymbol {
                line: line_no,
                symbol: symbol.into(),
            })
        };
        merged.clear();
        merged.push_str(left);
        merged.push_str(right);
        let rank = u32::try_from(rules.len()).map_err(|_| TableError::RankOverflow)?;
        rules.push(MergeRule {
            left: resolve(left)?,
            right: resolve(right)?,
            rank,
            new_token: resolve(&merged)?,
        });
    }
    Ok(rules)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(C)]
struct Slot {
    key: u64,
    value: u64,
}

const EMPTY_SLOT: Slot = Slot {
    key: EMPTY_KEY,
    value: 0,
};

/// 64-bit finalizer from MurmurHash3.
#[inline]
fn mix64(mut k: u64) -> u64 {
    k ^= k >> 33;
    k = k.wrapping_mul(0xff51_afd7_ed55_8ccd);
    k ^= k >> 33;
    k = k.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    k ^ (k >> 33)
}

/// Open-addressing table from packed pair keys to packed rule values.
///
/// Immutable once built; lookups take `&self` and may run from any number of
/// threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedPairTable {
    slots: Vec<Slot>,
    mask: usize,
    count: usize,
}

/// Builds the table for `rules`. Capacity is the smallest power of two that
/// is at least twice the rule count.
pub fn build_table(rules: &[MergeRule]) -> Result<PackedPairTable, TableError> {
    let capacity = (rules.len() * 2).next_power_of_two();
    let mut table = PackedPairTable {
        slots: vec![EMPTY_SLOT; capacity],
        mask: capacity - 1,
        count: 0,
    };
    for rule in rules {
        table.insert(rule)?;
    }
    Ok(table)
}

impl PackedPairTable {
    fn insert(&mut self, rule: &MergeRule) -> Result<(), TableError> {
        let key = pack_key(rule.left, rule.right);
        if key == EMPTY_KEY {
            return Err(TableError::ReservedKey);
        }
        let mut i = mix64(key) as usize & self.mask;
        loop {
            let slot = &mut self.slots[i];
            if slot.key == EMPTY_KEY {
                *slot = Slot {
                    key,
                    value: pack_value(rule.new_token, rule.rank),
                };
                self.count += 1;
                return Ok(());
            }
            if slot.key == key {
                return Err(TableError::DuplicatePair {
                    left: rule.left,
                    right: rule.right,
                    first_rank: unpack_value(slot.value).rank,
                    rank: rule.rank,
                });
            }
            i = (i + 1) & self.mask;
        }
    }

    /// Looks up a packed key and returns the packed value.
    #[inline]
    pub fn lookup_packed(&self, key: u64) -> Option<u64> {
        if key == EMPTY_KEY {
            return None;
        }
        let mut i = mix64(key) as usize & self.mask;
        loop {
            let slot = self.slots[i];
            if slot.key == key {
                return Some(slot.value);
            }
            if slot.key == EMPTY_KEY {
                return None;
            }
            i = (i + 1) & self.mask;
        }
    }

    /// Rule for the adjacent pair `(a, b)`, if any.
    #[inline]
    pub fn lookup(&self, a: TokenId, b: TokenId) -> Option<MergeValue> {
        self.lookup_packed(pack_key(a, b)).map(unpack_value)
    }

    /// Slot count.
    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    /// Number of rules stored.
    pub fn len(&self) -> usize {
        self.count
    }

    /// True when no rules are stored.
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// `len / capacity`.
    pub fn load_factor(&self) -> f64 {
        self.count as f64 / self.slots.len() as f64
    }

    /// The flat slot array as `(key, value)` pairs, empty slots included.
    pub fn raw_slots(&self) -> impl ExactSizeIterator<Item = (u64, u64)> + '_ {
        self.slots.iter().map(|s| (s.key, s.value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;
    use alloc::string::ToString;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rule(left: u32, right: u32, rank: u32, new_token: u32) -> MergeRule {
        MergeRule {
            left,
            right,
            rank,
            new_token,
        }
    }

    #[test]
    fn key_and_value_layout() {
        assert_eq!(pack_key(1, 2), 0x0000_0001_0000_0002);
        assert_eq!(pack_key(0, 0), 0);
        assert_eq!(pack_key(u32::MAX, u32::MAX), u64::MAX);
        assert_eq!(pack_value(256, 0), 0x0000_0100_0000_0000);
        assert_eq!(pack_value(0, 5), 5);
    }

    fn small_vocab() -> Vocab {
        Vocab::from_entries(
            ["Ġ", "t", "a", "Ġt", "Ġa", "h", "th"]
                .iter()
                .enumerate()
                .map(|(i, s)| (s.to_string(), i as u32)),
        )
        .unwrap()
    }

    #[test]
    fn parse_with_header() {
        let vocab = small_vocab();
        let rules = parse_merges("#version: 0.2\nĠ t\nĠ a\n".as_bytes(), &vocab).unwrap();
        assert_eq!(rules, [rule(0, 1, 0, 3), rule(0, 2, 1, 4)]);
    }

    #[test]
    fn parse_without_header_and_crlf() {
        let vocab = small_vocab();
        let rules = parse_merges("t h\r\nĠ t\r\n".as_bytes(), &vocab).unwrap();
        assert_eq!(rules, [rule(1, 5, 0, 6), rule(0, 1, 1, 3)]);
    }

    #[test]
    fn parse_errors() {
        let vocab = small_vocab();
        assert_eq!(
            parse_merges(b"x", &vocab),
            Err(TableError::MalformedLine { line: 1 })
        );
        assert_eq!(
            parse_merges(b"#v\nt h x", &vocab),
            Err(TableError::MalformedLine { line: 2 })
        );
        assert_eq!(
            parse_merges(b"t  h", &vocab),
            Err(TableError::MalformedLine { line: 1 })
        );
        assert_eq!(
            parse_merges(b"h t", &vocab),
            Err(TableError::UnknownSymbol {
                line: 1,
                symbol: "ht".into()
            })
        );
        assert_eq!(
            parse_merges(b"q t", &vocab),
            Err(TableError::UnknownSymbol {
                line: 1,
                symbol: "q".into()
            })
        );
        assert_eq!(
            parse_merges(b"\xff t", &vocab),
            Err(TableError::InvalidUtf8 { line: 1 })
        );
    }

    #[test]
    fn empty_table_misses() {
        let table = build_table(&[]).unwrap();
        assert!(table.is_empty());
        assert_eq!(table.lookup(0, 0), None);
        assert_eq!(table.lookup(u32::MAX, u32::MAX), None);
    }

    #[test]
    fn insert_then_find() {
        let table = build_table(&[rule(116, 104, 0, 400)]).unwrap();
        assert_eq!(
            table.lookup(116, 104),
            Some(MergeValue {
                new_token: 400,
                rank: 0
            })
        );
        assert_eq!(table.lookup(104, 116), None);
    }

    #[test]
    fn duplicate_and_reserved() {
        assert_eq!(
            build_table(&[rule(1, 2, 0, 3), rule(1, 2, 1, 4)]),
            Err(TableError::DuplicatePair {
                left: 1,
                right: 2,
                first_rank: 0,
                rank: 1
            })
        );
        assert_eq!(
            build_table(&[rule(u32::MAX, u32::MAX, 0, 1)]),
            Err(TableError::ReservedKey)
        );
    }

    #[test]
    fn capacity_is_power_of_two_at_half_load() {
        for n in [1usize, 2, 3, 100, 1000, 50_000] {
            let rules: Vec<_> = (0..n as u32).map(|i| rule(i, i + 1, i, i + 7)).collect();
            let table = build_table(&rules).unwrap();
            assert!(table.capacity().is_power_of_two());
            assert!(table.capacity() >= 2 * n);
            assert!(table.capacity() < 4 * n || n == 1);
            assert!(table.load_factor() <= 0.5);
        }
    }

    #[test]
    fn agrees_with_map_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut oracle = BTreeMap::new();
        let mut rules = Vec::new();
        while rules.len() < 5000 {
            let (a, b) = (rng.random_range(0..3000u32), rng.random_range(0..3000u32));
            if oracle.contains_key(&(a, b)) {
                continue;
            }
            let r = rule(a, b, rules.len() as u32, rng.random());
            oracle.insert((a, b), (r.new_token, r.rank));
            rules.push(r);
        }
        let table = build_table(&rules).unwrap();
        assert_eq!(table.len(), 5000);
        for _ in 0..10_000 {
            let (a, b) = (rng.random_range(0..3100u32), rng.random_range(0..3100u32));
            let got = table.lookup(a, b).map(|v| (v.new_token, v.rank));
            assert_eq!(got, oracle.get(&(a, b)).copied());
        }
        for r in &rules {
            assert_eq!(table.lookup(r.left, r.right).unwrap().rank, r.rank);
        }
    }

    #[test]
    fn construction_is_deterministic() {
        let rules: Vec<_> = (0..300u32).map(|i| rule(i % 17, i, i, i + 1)).collect();
        let a = build_table(&rules).unwrap();
        let b = build_table(&rules).unwrap();
        assert!(a.raw_slots().eq(b.raw_slots()));
    }

    proptest! {
        #[test]
        fn pack_key_injective(a in any::<u32>(), b in any::<u32>(), c in any::<u32>(), d in any::<u32>()) {
            prop_assert_eq!(pack_key(a, b) == pack_key(c, d), (a, b) == (c, d));
        }

        #[test]
        fn value_round_trip(n in any::<u32>(), r in any::<u32>()) {
            prop_assert_eq!(unpack_value(pack_value(n, r)), MergeValue { new_token: n, rank: r });
        }
    }
}
