use lanebpe_core::TokenId;
use serde::{Deserialize, Serialize};

/// How an engine output lines up with a golden token sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenReport {
    /// Same length and same ids.
    pub exact_match: bool,
    /// First index where the sequences differ, counting a length mismatch
    /// as a difference at the shorter length.
    pub first_divergence: Option<usize>,
    /// Positions that differ, including positions present in only one.
    pub divergences: usize,
    /// Golden length.
    pub expected_len: usize,
    /// Engine output length.
    pub actual_len: usize,
}

/// Compares `tokens` position by position with `golden`.
pub fn compare_golden(tokens: &[TokenId], golden: &[TokenId]) -> GoldenReport {
    let common = tokens.len().min(golden.len());
    let mismatched = (0..common).filter(|&i| tokens[i] != golden[i]);
    let first = mismatched.clone().next();
    let tail = tokens.len().max(golden.len()) - common;
    let divergences = mismatched.count() + tail;
    GoldenReport {
        exact_match: divergences == 0,
        first_divergence: first.or((tail > 0).then_some(common)),
        divergences,
        expected_len: golden.len(),
        actual_len: tokens.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical() {
        let r = compare_golden(&[1, 2, 3], &[1, 2, 3]);
        assert!(r.exact_match);
        assert_eq!((r.first_divergence, r.divergences), (None, 0));
        assert!(compare_golden(&[], &[]).exact_match);
    }

    #[test]
    fn one_flip() {
        let golden: Vec<u32> = (0..12).collect();
        let mut got = golden.clone();
        got[7] = 999;
        let r = compare_golden(&got, &golden);
        assert!(!r.exact_match);
        assert_eq!((r.first_divergence, r.divergences), (Some(7), 1));
    }

    #[test]
    fn length_mismatch() {
        let r = compare_golden(&[1, 2], &[1, 2, 3, 4]);
        assert_eq!((r.first_divergence, r.divergences), (Some(2), 2));
        let r = compare_golden(&[9, 2, 3], &[1, 2]);
        assert_eq!((r.first_divergence, r.divergences), (Some(0), 2));
    }
}
