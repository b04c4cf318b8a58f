//! Sweep reports as CSV, JSON, or a latency table with lengths as rows and
//! engines as columns, followed by a speedup table.
//!
//! `speedup_vs_<baseline>` is the baseline engine's mean latency divided by
//! the row's mean latency at the same length, so values above one mean the
//! row's engine is faster.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::bench::BenchRecord;

/// Report layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Comma-separated with a header row.
    Csv,
    /// Array of record objects.
    Json,
    /// Human-readable tables.
    Table,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "table" => Ok(ReportFormat::Table),
            other => Err(format!(
                "unknown report format {other:?} (csv, json, table)"
            )),
        }
    }
}

/// Report errors.
#[derive(Debug, Error)]
pub enum ReportError {
    /// Nothing to report.
    #[error("no benchmark records to report")]
    EmptyRecords,
    /// CSV writing or parsing failed.
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    /// JSON writing or parsing failed.
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Speedup of each record relative to `baseline` at the same length.
pub fn speedups(records: &[BenchRecord], baseline: &str) -> Vec<Option<f64>> {
    let base: BTreeMap<usize, f64> = records
        .iter()
        .filter(|r| r.engine == baseline)
        .map(|r| (r.seq_len, r.mean_latency_ms))
        .collect();
    records
        .iter()
        .map(|r| base.get(&r.seq_len).map(|b| b / r.mean_latency_ms))
        .collect()
}

/// Row label for a length: plain below 1000, otherwise thousands with `K`.
pub fn length_label(len: usize) -> String {
    if len < 1000 {
        len.to_string()
    } else {
        format!("{}K", len / 1000)
    }
}

fn opt_string<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Renders `records`; the speedup column is relative to `baseline`.
pub fn emit_report(
    records: &[BenchRecord],
    format: ReportFormat,
    baseline: &str,
) -> Result<String, ReportError> {
    if records.is_empty() {
        return Err(ReportError::EmptyRecords);
    }
    let speedup = speedups(records, baseline);
    let speedup_col = format!("speedup_vs_{baseline}");
    let with_golden = records.iter().any(|r| r.golden_match.is_some());
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec![
                "engine",
                "seq_len",
                "mean_latency_ms",
                "throughput",
                speedup_col.as_str(),
                "std_latency_ms",
                "mean_engine_ms",
                "samples",
                "runs",
                "output_tokens",
                "output_digest",
            ];
            if with_golden {
                header.extend(["golden_match", "golden_divergences"]);
            }
            w.write_record(&header)?;
            for (r, s) in records.iter().zip(&speedup) {
                let mut row = vec![
                    r.engine.clone(),
                    r.seq_len.to_string(),
                    r.mean_latency_ms.to_string(),
                    r.throughput_tokens_per_s.to_string(),
                    opt_string(*s),
                    r.std_latency_ms.to_string(),
                    r.mean_engine_ms.to_string(),
                    r.samples.to_string(),
                    r.runs.to_string(),
                    r.output_tokens.to_string(),
                    r.output_digest.clone(),
                ];
                if with_golden {
                    row.push(opt_string(r.golden_match));
                    row.push(opt_string(r.golden_divergences));
                }
                w.write_record(&row)?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| csv::Error::from(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is built from UTF-8 fields"))
        }
        ReportFormat::Json => {
            let rows = records
                .iter()
                .zip(&speedup)
                .map(|(r, s)| {
                    let mut v = serde_json::to_value(r)?;
                    v[&speedup_col] = serde_json::json!(s);
                    Ok(v)
                })
                .collect::<Result<Vec<_>, serde_json::Error>>()?;
            let mut out = serde_json::to_string_pretty(&rows)?;
            out.push('\n');
            Ok(out)
        }
        ReportFormat::Table => Ok(render_tables(records, &speedup, baseline)),
    }
}

fn render_tables(records: &[BenchRecord], speedup: &[Option<f64>], baseline: &str) -> String {
    let mut engines: Vec<&str> = Vec::new();
    let mut lengths: Vec<usize> = Vec::new();
    for r in records {
        if !engines.contains(&r.engine.as_str()) {
            engines.push(&r.engine);
        }
        if !lengths.contains(&r.seq_len) {
            lengths.push(r.seq_len);
        }
    }
    lengths.sort_unstable();
    let cell = |engine: &str, len: usize| {
        records
            .iter()
            .zip(speedup)
            .find(|(r, _)| r.engine == engine && r.seq_len == len)
    };

    let mut out = String::new();
    let width = engines.iter().map(|e| e.len()).max().unwrap_or(0).max(10);
    let _ = writeln!(out, "Latency (ms)");
    let _ = write!(out, "{:<9}", "Seq. Len");
    for e in &engines {
        let _ = write!(out, " {e:>width$}");
    }
    out.push('\n');
    for &len in &lengths {
        let _ = write!(out, "{:<9}", length_label(len));
        for e in &engines {
            let v = cell(e, len).map_or("-".to_string(), |(r, _)| {
                format!("{:.2}", r.mean_latency_ms)
            });
            let _ = write!(out, " {v:>width$}");
        }
        out.push('\n');
    }

    let others: Vec<&str> = engines.iter().copied().filter(|e| *e != baseline).collect();
    if engines.contains(&baseline) && !others.is_empty() {
        let heads: Vec<String> = others.iter().map(|e| format!("{e} / {baseline}")).collect();
        let w2 = heads.iter().map(String::len).max().unwrap_or(0).max(10);
        let _ = writeln!(out, "\nSpeedup vs {baseline}");
        let _ = write!(out, "{:<9}", "Seq. Len");
        for h in &heads {
            let _ = write!(out, " {h:>w2$}");
        }
        out.push('\n');
        for &len in &lengths {
            let _ = write!(out, "{:<9}", length_label(len));
            for e in &others {
                let v = cell(e, len)
                    .and_then(|(_, s)| *s)
                    .map_or("-".to_string(), |s| format!("{s:.2}"));
                let _ = write!(out, " {v:>w2$}");
            }
            out.push('\n');
        }
    }
    out
}

/// Reads a CSV report back into records. Speedup columns are derived and
/// ignored.
pub fn parse_csv_report(text: &str) -> Result<Vec<BenchRecord>, ReportError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    Ok(reader
        .deserialize()
        .collect::<Result<Vec<BenchRecord>, _>>()?)
}

/// Reads a JSON report back into records.
pub fn parse_json_report(text: &str) -> Result<Vec<BenchRecord>, ReportError> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(engine: &str, seq_len: usize, latency: f64) -> BenchRecord {
        BenchRecord {
            engine: engine.into(),
            seq_len,
            mean_latency_ms: latency,
            throughput_tokens_per_s: seq_len as f64 / (latency / 1e3),
            std_latency_ms: 0.125,
            mean_engine_ms: latency / 3.0,
            samples: 2,
            runs: 10,
            output_tokens: seq_len / 3,
            output_digest: "00ff00ff00ff00ff".into(),
            golden_match: None,
            golden_divergences: None,
        }
    }

    fn grid() -> Vec<BenchRecord> {
        let mut v = Vec::new();
        for (i, e) in ["sequential", "baseline", "optimized"].iter().enumerate() {
            for (j, len) in [256, 1024, 4096, 16384, 131_072].iter().enumerate() {
                v.push(record(e, *len, 1.0 + i as f64 * 0.37 + j as f64 * 11.3));
            }
        }
        v
    }

    #[test]
    fn csv_rows_and_round_trip() {
        let records = grid();
        let csv = emit_report(&records, ReportFormat::Csv, "sequential").unwrap();
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(
            header.starts_with("engine,seq_len,mean_latency_ms,throughput,speedup_vs_sequential")
        );
        assert!(!header.contains("golden"));
        assert_eq!(lines.count(), 15);
        assert_eq!(parse_csv_report(&csv).unwrap(), records);
    }

    #[test]
    fn golden_columns_appear_when_present() {
        let mut records = grid();
        records[0].golden_match = Some(true);
        records[0].golden_divergences = Some(0);
        let csv = emit_report(&records, ReportFormat::Csv, "sequential").unwrap();
        assert!(csv
            .lines()
            .next()
            .unwrap()
            .ends_with("golden_match,golden_divergences"));
        assert_eq!(parse_csv_report(&csv).unwrap(), records);
    }

    #[test]
    fn json_round_trip() {
        let records = grid();
        let json = emit_report(&records, ReportFormat::Json, "baseline").unwrap();
        assert!(json.contains("\"speedup_vs_baseline\""));
        assert_eq!(parse_json_report(&json).unwrap(), records);
    }

    #[test]
    fn speedup_is_baseline_over_subject() {
        let records = vec![
            record("sequential", 256, 10.0),
            record("optimized", 256, 4.0),
        ];
        assert_eq!(speedups(&records, "sequential"), [Some(1.0), Some(2.5)]);
        assert_eq!(speedups(&records, "tiktoken"), [None, None]);
    }

    #[test]
    fn table_layout() {
        let t = emit_report(&grid(), ReportFormat::Table, "sequential").unwrap();
        let rows: Vec<&str> = t.lines().collect();
        assert!(rows[1].starts_with("Seq. Len"));
        assert!(rows[1].contains("sequential") && rows[1].contains("optimized"));
        let labels: Vec<&str> = rows[2..7]
            .iter()
            .map(|r| r.split_whitespace().next().unwrap())
            .collect();
        assert_eq!(labels, ["256", "1K", "4K", "16K", "131K"]);
        assert!(t.contains("optimized / sequential"));
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(
            emit_report(&[], ReportFormat::Csv, "sequential"),
            Err(ReportError::EmptyRecords)
        ));
    }
}
