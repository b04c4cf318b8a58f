//! GPT-2 byte-level symbols.
//!
//! Every byte value is assigned a printable Unicode scalar so that any byte
//! string, valid UTF-8 or not, can be spelled with vocabulary symbols. Bytes
//! in `'!'..='~'`, `0xA1..=0xAC` and `0xAE..=0xFF` keep their own code point;
//! the remaining 68 bytes get `U+0100`, `U+0101`, ... in ascending byte order.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::TokenId;

/// Number of byte values that map to shifted code points.
pub const SHIFTED_BYTES: usize = 68;

/// First code point handed out to bytes outside the printable ranges.
const SHIFT_BASE: u32 = 256;

/// Errors raised while converting between bytes and token ids.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    /// A byte's base symbol has no id in the vocabulary.
    #[error("vocabulary has no id for the symbol {symbol:?} of byte 0x{byte:02x}")]
    MissingSymbol {
        /// The byte whose symbol is missing.
        byte: u8,
        /// The symbol assigned to that byte.
        symbol: char,
    },
    /// A token id that the vocabulary does not define.
    #[error("unknown token id {0}")]
    UnknownTokenId(TokenId),
    /// A vocabulary symbol contains a character outside the byte alphabet.
    #[error("symbol character {0:?} does not correspond to any byte")]
    UnmappedSymbol(char),
    /// Two vocabulary entries share an id.
    #[error("token id {id} is assigned to both {first:?} and {second:?}")]
    DuplicateId {
        /// The shared id.
        id: TokenId,
        /// Symbol seen first.
        first: String,
        /// Symbol seen second.
        second: String,
    },
}

/// The bijection between the 256 byte values and their GPT-2 symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ByteEncoder {
    byte_to_symbol: [char; 256],
    // Indexed by code point; every symbol is below 324.
    symbol_to_byte: [Option<u8>; 324],
}

fn is_printable(byte: u8) -> bool {
    matches!(byte, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF)
}

/// Builds the GPT-2 byte encoder.
pub fn build_byte_encoder() -> ByteEncoder {
    let mut byte_to_symbol = ['\0'; 256];
    let mut symbol_to_byte = [None; 324];
    let mut shifted = 0u32;
    for byte in 0..=255u8 {
        let code = if is_printable(byte) {
            u32::from(byte)
        } else {
            let code = SHIFT_BASE + shifted;
            shifted += 1;
            code
        };
        // Both ranges stay below the surrogate block.
        let symbol = char::from_u32(code).expect("code point below 0xD800");
        byte_to_symbol[usize::from(byte)] = symbol;
        symbol_to_byte[code as usize] = Some(byte);
    }
    debug_assert_eq!(shifted as usize, SHIFTED_BYTES);
    ByteEncoder {
        byte_to_symbol,
        symbol_to_byte,
    }
}

impl Default for ByteEncoder {
    fn default() -> Self {
        build_byte_encoder()
    }
}

impl ByteEncoder {
    /// Symbol assigned to `byte`.
    #[inline]
    pub fn symbol(&self, byte: u8) -> char {
        self.byte_to_symbol[usize::from(byte)]
    }

    /// Byte whose symbol is `symbol`, if any.
    #[inline]
    pub fn byte(&self, symbol: char) -> Option<u8> {
        self.symbol_to_byte.get(symbol as usize).copied().flatten()
    }

    /// Spells a byte string as a symbol string.
    pub fn bytes_to_symbols(&self, bytes: &[u8]) -> String {
        bytes.iter().map(|&b| self.symbol(b)).collect()
    }

    /// Maps a symbol string back to the bytes it spells.
    pub fn symbols_to_bytes(&self, symbols: &str, out: &mut Vec<u8>) -> Result<(), CodecError> {
        for c in symbols.chars() {
            out.push(self.byte(c).ok_or(CodecError::UnmappedSymbol(c))?);
        }
        Ok(())
    }
}

/// A BPE vocabulary: symbol strings (concatenations of encoder symbols) and
/// their ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    symbol_to_id: BTreeMap<String, TokenId>,
    id_to_symbol: BTreeMap<TokenId, String>,
}

impl Vocab {
    /// Builds a vocabulary from `(symbol, id)` pairs.
    ///
    /// A symbol listed twice keeps its last id; two symbols sharing an id is
    /// an error since decoding would be ambiguous.
    pub fn from_entries<I>(entries: I) -> Result<Self, CodecError>
    where
        I: IntoIterator<Item = (String, TokenId)>,
    {
        let mut vocab = Vocab::default();
        for (symbol, id) in entries {
            if let Some(old) = vocab.symbol_to_id.insert(symbol.clone(), id) {
                vocab.id_to_symbol.remove(&old);
            }
            if let Some(first) = vocab.id_to_symbol.get(&id) {
                return Err(CodecError::DuplicateId {
                    id,
                    first: first.clone(),
                    second: symbol,
                });
            }
            vocab.id_to_symbol.insert(id, symbol);
        }
        Ok(vocab)
    }

    /// Id of `symbol`.
    pub fn id(&self, symbol: &str) -> Option<TokenId> {
        self.symbol_to_id.get(symbol).copied()
    }

    /// Symbol string of `id`.
    pub fn symbol(&self, id: TokenId) -> Option<&str> {
        self.id_to_symbol.get(&id).map(String::as_str)
    }

    /// Number of entries.
    pub fn len(&self) -> usize {
        self.symbol_to_id.len()
    }

    /// True when the vocabulary has no entries.
    pub fn is_empty(&self) -> bool {
        self.symbol_to_id.is_empty()
    }

    /// Iterates `(symbol, id)` in symbol order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, TokenId)> {
        self.symbol_to_id.iter().map(|(s, &id)| (s.as_str(), id))
    }
}

/// Per-byte token ids resolved once from an encoder and a vocabulary.
///
/// This is the hot-path form of [`encode_bytes`]: encoding becomes one table
/// read per byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ByteTokenMap {
    ids: [Option<TokenId>; 256],
}

impl ByteTokenMap {
    /// Resolves the id of every byte's symbol. Bytes without an id are only
    /// reported when they are encoded.
    pub fn new(encoder: &ByteEncoder, vocab: &Vocab) -> Self {
        let mut ids = [None; 256];
        let mut buf = [0u8; 4];
        for byte in 0..=255u8 {
            let symbol = encoder.symbol(byte).encode_utf8(&mut buf);
            ids[usize::from(byte)] = vocab.id(symbol);
        }
        ByteTokenMap { ids }
    }

    /// True when all 256 bytes have ids.
    pub fn is_complete(&self) -> bool {
        self.ids.iter().all(Option::is_some)
    }

    /// Id of `byte`'s symbol.
    #[inline]
    pub fn id(&self, byte: u8) -> Option<TokenId> {
        self.ids[usize::from(byte)]
    }

    /// Appends the byte-level ids of `text` to `out`.
    pub fn encode_into(
        &self,
        encoder: &ByteEncoder,
        text: &[u8],
        out: &mut Vec<TokenId>,
    ) -> Result<(), CodecError> {
        out.reserve(text.len());
        for &byte in text {
            match self.ids[usize::from(byte)] {
                Some(id) => out.push(id),
                None => {
                    return Err(CodecError::MissingSymbol {
                        byte,
                        symbol: encoder.symbol(byte),
                    })
                }
            }
        }
        Ok(())
    }
}

/// Maps every byte of `text` to the id of its symbol; the output has one id
/// per input byte.
pub fn encode_bytes(
    text: &[u8],
    encoder: &ByteEncoder,
    vocab: &Vocab,
) -> Result<Vec<TokenId>, CodecError> {
    let map = ByteTokenMap::new(encoder, vocab);
    let mut out = Vec::with_capacity(text.len());
    map.encode_into(encoder, text, &mut out)?;
    Ok(out)
}

/// Concatenates the symbols of `tokens` and maps them back to bytes.
pub fn decode_tokens(
    tokens: &[TokenId],
    encoder: &ByteEncoder,
    vocab: &Vocab,
) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::with_capacity(tokens.len());
    for &id in tokens {
        let symbol = vocab.symbol(id).ok_or(CodecError::UnknownTokenId(id))?;
        encoder.symbols_to_bytes(symbol, &mut out)?;
    }
    Ok(out)
}
