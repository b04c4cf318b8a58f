use std::path::Path;
use std::sync::Mutex;

use lanebpe_core::{
    build_byte_encoder, build_table, decode_tokens, parse_merges, BlockConfig, ByteEncoder,
    ByteTokenMap, CodecError, PackedPairTable, TableError, TokenId, Vocab, Worker,
};
use thiserror::Error;

use crate::files::{self, FormatError};

/// Errors building a [`Tokenizer`].
#[derive(Debug, Error)]
pub enum LoadError {
    /// Vocabulary or merges file could not be read or decoded.
    #[error(transparent)]
    Format(#[from] FormatError),
    /// Merge rules are malformed or reference unknown symbols.
    #[error("merges: {0}")]
    Merges(#[from] TableError),
}

/// Everything needed to tokenize, built once: byte encoder, vocabulary,
/// packed merge table, plus a pool of idle engine workers whose buffers are
/// reused across calls.
#[derive(Debug)]
pub struct Tokenizer {
    encoder: ByteEncoder,
    vocab: Vocab,
    byte_ids: ByteTokenMap,
    table: PackedPairTable,
    idle: Mutex<Vec<Worker>>,
}

impl Tokenizer {
    /// Builds from in-memory vocabulary JSON and `merges.txt` content.
    pub fn from_bytes(vocab_json: &[u8], merges_txt: &[u8]) -> Result<Self, LoadError> {
        let vocab = files::parse_vocab_json(vocab_json)?;
        Self::from_vocab(vocab, merges_txt)
    }

    /// Builds from an already parsed vocabulary.
    pub fn from_vocab(vocab: Vocab, merges_txt: &[u8]) -> Result<Self, LoadError> {
        let rules = parse_merges(merges_txt, &vocab)?;
        let table = build_table(&rules)?;
        let encoder = build_byte_encoder();
        let byte_ids = ByteTokenMap::new(&encoder, &vocab);
        Ok(Tokenizer {
            encoder,
            vocab,
            byte_ids,
            table,
            idle: Mutex::new(Vec::new()),
        })
    }

    /// Builds from a vocabulary JSON file and a merges file.
    pub fn from_files(vocab_path: &Path, merges_path: &Path) -> Result<Self, LoadError> {
        let vocab = files::load_vocab(vocab_path)?;
        Self::from_vocab(vocab, &files::read(merges_path)?)
    }

    /// The byte encoder.
    pub fn encoder(&self) -> &ByteEncoder {
        &self.encoder
    }

    /// The vocabulary.
    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    /// The merge table.
    pub fn table(&self) -> &PackedPairTable {
        &self.table
    }

    /// Byte-level ids of `text`, one per byte.
    pub fn encode_bytes(&self, text: &[u8]) -> Result<Vec<TokenId>, CodecError> {
        let mut out = Vec::with_capacity(text.len());
        self.byte_ids.encode_into(&self.encoder, text, &mut out)?;
        Ok(out)
    }

    /// Bytes spelled by `ids`.
    pub fn decode(&self, ids: &[TokenId]) -> Result<Vec<u8>, CodecError> {
        decode_tokens(ids, &self.encoder, &self.vocab)
    }

    pub(crate) fn checkout_worker(&self, config: BlockConfig) -> Worker {
        let mut idle = self.idle.lock().unwrap_or_else(|e| e.into_inner());
        match idle.iter().position(|w| w.config() == config) {
            Some(i) => idle.swap_remove(i),
            None => Worker::new(config),
        }
    }

    pub(crate) fn return_worker(&self, worker: Worker) {
        self.idle
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(worker);
    }
}
