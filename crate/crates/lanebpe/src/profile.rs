//! Counter-based profile of one batch: stage times plus the share of each
//! work category among all counted events.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::batch::{BatchResult, StageTimings};

/// Fraction of all counted events per category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EventShares {
    /// Merge passes.
    pub passes: f64,
    /// Table probes.
    pub lookups: f64,
    /// Compaction writes.
    pub compaction_moves: f64,
    /// Fresh buffer allocations.
    pub buffer_allocations: f64,
}

impl EventShares {
    /// Sum of the shares; 1 up to rounding unless there were no events.
    pub fn total(&self) -> f64 {
        self.passes + self.lookups + self.compaction_moves + self.buffer_allocations
    }
}

/// Profile of one batch run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    /// Engine label.
    pub engine: String,
    /// Chunks processed.
    pub chunks: usize,
    /// Byte-level ids in.
    pub input_tokens: usize,
    /// Merged ids out.
    pub output_tokens: usize,
    /// Merge passes.
    pub passes: u64,
    /// Table probes.
    pub lookups: u64,
    /// Compaction writes.
    pub compaction_moves: u64,
    /// Fresh buffer allocations.
    pub buffer_allocations: u64,
    /// Wall-clock stage split.
    pub timings: StageTimings,
    /// Engine time summed over chunks.
    pub engine_time_ms: f64,
    /// Event shares.
    pub shares: EventShares,
}

impl ProfileReport {
    /// Builds the profile of `result`.
    pub fn from_batch(engine: &str, result: &BatchResult) -> Self {
        let c = result.counters;
        let events = (c.passes + c.lookups + c.compaction_moves + c.buffer_allocations) as f64;
        let share = |n: u64| if events > 0.0 { n as f64 / events } else { 0.0 };
        ProfileReport {
            engine: engine.into(),
            chunks: result.chunks,
            input_tokens: result.input_tokens,
            output_tokens: result.token_ids.iter().map(Vec::len).sum(),
            passes: c.passes,
            lookups: c.lookups,
            compaction_moves: c.compaction_moves,
            buffer_allocations: c.buffer_allocations,
            timings: result.timings,
            engine_time_ms: result.engine_time_ms,
            shares: EventShares {
                passes: share(c.passes),
                lookups: share(c.lookups),
                compaction_moves: share(c.compaction_moves),
                buffer_allocations: share(c.buffer_allocations),
            },
        }
    }
}

impl fmt::Display for ProfileReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = &self.timings;
        writeln!(
            f,
            "engine {}: {} chunks, {} -> {} tokens",
            self.engine, self.chunks, self.input_tokens, self.output_tokens
        )?;
        writeln!(
            f,
            "  time ms: encode {:.3}  engine {:.3}  assemble {:.3}  total {:.3}  (engine sum {:.3})",
            t.encode_ms, t.engine_ms, t.assemble_ms, t.total_ms, self.engine_time_ms
        )?;
        let s = &self.shares;
        writeln!(f, "  {:<20} {:>14} {:>9}", "counter", "events", "share")?;
        for (name, n, share) in [
            ("passes", self.passes, s.passes),
            ("lookups", self.lookups, s.lookups),
            (
                "compaction_moves",
                self.compaction_moves,
                s.compaction_moves,
            ),
            (
                "buffer_allocations",
                self.buffer_allocations,
                s.buffer_allocations,
            ),
        ] {
            writeln!(f, "  {name:<20} {n:>14} {:>8.4}%", share * 100.0)?;
        }
        Ok(())
    }
}
