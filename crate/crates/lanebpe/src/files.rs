//! On-disk formats: the GPT-2 vocabulary JSON, `merges.txt`, and golden token
//! files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use lanebpe_core::{CodecError, TokenId, Vocab};
use thiserror::Error;

/// Errors reading the formats in this module.
#[derive(Debug, Error)]
pub enum FormatError {
    /// File could not be read.
    #[error("reading {path}: {source}")]
    Io {
        /// File that failed.
        path: PathBuf,
        /// Underlying error.
        #[source]
        source: std::io::Error,
    },
    /// The vocabulary is not a JSON object of symbol to integer.
    #[error("vocabulary JSON: {0}")]
    VocabJson(#[source] serde_json::Error),
    /// A vocabulary id does not fit in 32 bits.
    #[error("vocabulary id {id} for {symbol:?} does not fit in 32 bits")]
    IdOutOfRange {
        /// Offending symbol.
        symbol: String,
        /// Its id.
        id: u64,
    },
    /// Vocabulary entries conflict.
    #[error(transparent)]
    Vocab(#[from] CodecError),
    /// Golden token file is neither a JSON integer array nor one id per line.
    #[error("golden token file, line {line}: {reason}")]
    MalformedGoldenFile {
        /// 1-based line (1 for JSON input).
        line: usize,
        /// What was wrong.
        reason: String,
    },
}

pub(crate) fn read(path: &Path) -> Result<Vec<u8>, FormatError> {
    fs::read(path).map_err(|source| FormatError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Parses a vocabulary JSON object (`{"symbol": id, ...}`).
pub fn parse_vocab_json(bytes: &[u8]) -> Result<Vocab, FormatError> {
    let raw: BTreeMap<String, u64> =
        serde_json::from_slice(bytes).map_err(FormatError::VocabJson)?;
    let mut entries = Vec::with_capacity(raw.len());
    for (symbol, id) in raw {
        let id = TokenId::try_from(id).map_err(|_| FormatError::IdOutOfRange {
            symbol: symbol.clone(),
            id,
        })?;
        entries.push((symbol, id));
    }
    Ok(Vocab::from_entries(entries)?)
}

/// Reads and parses a vocabulary JSON file.
pub fn load_vocab(path: &Path) -> Result<Vocab, FormatError> {
    parse_vocab_json(&read(path)?)
}

/// Parses a golden token file: a JSON integer array, or one decimal id per
/// line (blank lines ignored).
pub fn parse_golden(bytes: &[u8]) -> Result<Vec<TokenId>, FormatError> {
    let text = std::str::from_utf8(bytes).map_err(|e| FormatError::MalformedGoldenFile {
        line: 1 + bytes[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count(),
        reason: "not valid UTF-8".into(),
    })?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(text).map_err(|e| FormatError::MalformedGoldenFile {
            line: e.line(),
            reason: e.to_string(),
        });
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| FormatError::MalformedGoldenFile {
                    line: i + 1,
                    reason: format!("{:?} is not a token id", l.trim()),
                })
        })
        .collect()
}

/// Reads and parses a golden token file.
pub fn load_golden(path: &Path) -> Result<Vec<TokenId>, FormatError> {
    parse_golden(&read(path)?)
}

/// Formats ids one per line, the line-oriented golden format.
pub fn format_ids(ids: &[TokenId]) -> String {
    let mut out = String::with_capacity(ids.len() * 6);
    for id in ids {
        out.push_str(&id.to_string());
        out.push('\n');
    }
    out
}
