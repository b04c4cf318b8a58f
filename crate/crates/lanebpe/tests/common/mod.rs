#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use lanebpe::Tokenizer;

pub fn workspace_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

pub fn vocab_path() -> PathBuf {
    workspace_path("data/gpt2/vocab.json")
}

pub fn merges_path() -> PathBuf {
    workspace_path("data/gpt2/merges.txt")
}

pub fn prose_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/prose")
}

pub fn official() -> &'static Tokenizer {
    static TOKENIZER: OnceLock<Tokenizer> = OnceLock::new();
    TOKENIZER.get_or_init(|| {
        Tokenizer::from_files(&vocab_path(), &merges_path()).expect("official GPT-2 files")
    })
}

/// The 100 prose samples with their golden ids.
pub fn prose_samples() -> Vec<(Vec<u8>, Vec<u32>)> {
    let dir = prose_dir();
    (0..100)
        .map(|i| {
            let text = std::fs::read(dir.join(format!("{i:03}.txt"))).unwrap();
            let golden = lanebpe::files::load_golden(&dir.join(format!("{i:03}.ids"))).unwrap();
            (text, golden)
        })
        .collect()
}
