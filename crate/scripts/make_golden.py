#!/usr/bin/env python3
"""Build the ASCII prose fixtures and their golden token files.

Samples are ASCII paragraphs from the Python documentation topics shipped
with CPython (pydoc_data.topics), grouped three at a time. Golden ids come
from a regex-free greedy BPE written here from scratch (the GPT-2
encoder.py merge loop applied to the whole text, no pre-tokenization).
When the HuggingFace `tokenizers` package is importable, every sample is
cross-checked against its BPE model with a regex-free byte-level
pre-tokenizer, which also produces corpus.ids for the whole corpus.

Usage: scripts/make_golden.py [OUT_DIR]
"""

import json
import sys
from pathlib import Path

import pydoc_data.topics

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data" / "gpt2"
OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "crates" / "lanebpe" / "tests" / "fixtures" / "prose"
SAMPLES = 100
GROUP = 3
MIN_PARAGRAPH = 300


def byte_encoder():
    printable = list(range(0x21, 0x7F)) + list(range(0xA1, 0xAD)) + list(range(0xAE, 0x100))
    table = {b: chr(b) for b in printable}
    n = 0
    for b in range(256):
        if b not in table:
            table[b] = chr(256 + n)
            n += 1
    return table


def load_ranks():
    lines = (DATA / "merges.txt").read_text(encoding="utf-8").splitlines()
    rules = [tuple(l.split(" ")) for l in lines[1:] if l]
    return {pair: rank for rank, pair in enumerate(rules)}


def greedy_bpe(symbols, ranks):
    word = list(symbols)
    while len(word) > 1:
        pairs = set(zip(word, word[1:]))
        best = min(pairs, key=lambda p: ranks.get(p, float("inf")))
        if best not in ranks:
            break
        first, second = best
        merged = []
        i = 0
        while i < len(word):
            if i + 1 < len(word) and word[i] == first and word[i + 1] == second:
                merged.append(first + second)
                i += 2
            else:
                merged.append(word[i])
                i += 1
        word = merged
    return word


def samples():
    paragraphs = [
        p
        for key in sorted(pydoc_data.topics.topics)
        for p in pydoc_data.topics.topics[key].split("\n\n")
        if p.isascii() and len(p) >= MIN_PARAGRAPH
    ]
    groups = ["\n\n".join(paragraphs[i : i + GROUP]) for i in range(0, len(paragraphs), GROUP)]
    if len(groups) < SAMPLES:
        sys.exit(f"only {len(groups)} samples available")
    return groups[:SAMPLES]


def hf_tokenizer():
    try:
        from tokenizers import Tokenizer, models, pre_tokenizers
    except ImportError:
        return None
    tok = Tokenizer(models.BPE.from_file(str(DATA / "vocab.json"), str(DATA / "merges.txt")))
    tok.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False, use_regex=False)
    return tok


def main():
    encoder = byte_encoder()
    vocab = json.loads((DATA / "vocab.json").read_text(encoding="utf-8"))
    ranks = load_ranks()
    hf = hf_tokenizer()
    OUT.mkdir(parents=True, exist_ok=True)
    texts = samples()
    for i, text in enumerate(texts):
        symbols = [encoder[b] for b in text.encode("ascii")]
        ids = [vocab[s] for s in greedy_bpe(symbols, ranks)]
        if hf is not None and hf.encode(text).ids != ids:
            sys.exit(f"sample {i}: oracles disagree")
        (OUT / f"{i:03}.txt").write_bytes(text.encode("ascii"))
        (OUT / f"{i:03}.ids").write_text("".join(f"{t}\n" for t in ids))
    corpus = "\n\n".join(texts)
    (OUT / "corpus.txt").write_bytes(corpus.encode("ascii"))
    if hf is not None:
        (OUT / "corpus.ids").write_text("".join(f"{t}\n" for t in hf.encode(corpus).ids))
    print(f"{len(texts)} samples, corpus {len(corpus)} bytes, cross-check {'on' if hf else 'off'}")


if __name__ == "__main__":
    main()
