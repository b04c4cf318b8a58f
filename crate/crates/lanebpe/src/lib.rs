//! GPT-2 byte-level BPE on top of `lanebpe-core`: vocabulary and merges
//! loading, the batch pipeline with chunking and a worker pool, window
//! sweeps with CSV/JSON/table reports, golden-file comparison, counter
//! profiles, and the `lanebpe` command line.

pub mod batch;
pub mod bench;
pub mod cli;
pub mod files;
pub mod golden;
pub mod profile;
pub mod report;
mod tokenizer;

pub use batch::{tokenize_batch, BatchConfig, BatchError, BatchResult};
pub use bench::{make_windows, run_sweep, BenchRecord, SweepSpec};
pub use golden::{compare_golden, GoldenReport};
pub use lanebpe_core as core;
pub use profile::ProfileReport;
pub use report::{emit_report, ReportFormat};
pub use tokenizer::{LoadError, Tokenizer};
