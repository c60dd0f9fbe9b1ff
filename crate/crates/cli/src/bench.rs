use std::io::Write;
use std::ops::RangeInclusive;
use std::path::Path;

use anyhow::{bail, Context, Result};
use dac_core::bench::{run_bench_capped, BenchRow, BenchScenario};
use serde::Serialize;

/// `"3..8"` (inclusive) or a single `"5"`.
pub fn parse_range(text: &str) -> Result<RangeInclusive<usize>> {
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .with_context(|| format!("bad number {s:?} in range {text:?}"))
    };
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let n = parse(text)?;
            (n, n)
        }
    };
    if lo > hi {
        bail!("empty range {text:?}");
    }
    Ok(lo..=hi)
}

#[derive(Debug, Serialize)]
struct CsvRow {
    scenario: String,
    size: usize,
    overlap: usize,
    dac_micros: String,
    oracle_micros: String,
    results_equal: String,
}

impl From<&BenchRow> for CsvRow {
    fn from(r: &BenchRow) -> Self {
        CsvRow {
            scenario: r.scenario.clone(),
            size: r.size,
            overlap: r.overlap,
            dac_micros: format!("{:.3}", r.dac_micros),
            oracle_micros: r
                .oracle_micros
                .map_or_else(|| "skipped".into(), |o| format!("{o:.3}")),
            results_equal: r
                .results_equal
                .map_or_else(|| "skipped".into(), |e| e.to_string()),
        }
    }
}

pub fn run(
    scenarios: impl IntoIterator<Item = BenchScenario>,
    reps: usize,
    oracle_cap: usize,
    csv_path: Option<&Path>,
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{:<9} {:>5} {:>7} {:>14} {:>14} {:>6}",
        "scenario", "size", "overlap", "dac_us", "oracle_us", "equal"
    )?;
    for s in scenarios {
        let row = run_bench_capped(&s, reps, oracle_cap)
            .with_context(|| format!("{} size {}", s.kind.label(), s.size))?;
        let csv = CsvRow::from(&row);
        writeln!(
            out,
            "{:<9} {:>5} {:>7} {:>14} {:>14} {:>6}",
            csv.scenario,
            csv.size,
            csv.overlap,
            csv.dac_micros,
            csv.oracle_micros,
            csv.results_equal
        )?;
        if row.results_equal == Some(false) {
            eprintln!(
                "warning: {} size {}: dac {} vs oracle {:?}",
                row.scenario, row.size, row.dac_min, row.oracle_min
            );
        }
        rows.push(row);
    }
    if let Some(path) = csv_path {
        let mut w = csv::Writer::from_path(path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        for r in &rows {
            w.serialize(CsvRow::from(r))?;
        }
        w.flush()?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("2..5").unwrap(), 2..=5);
        assert_eq!(parse_range("2..=5").unwrap(), 2..=5);
        assert_eq!(parse_range(" 7 ").unwrap(), 7..=7);
        assert!(parse_range("5..2").is_err());
        assert!(parse_range("a..2").is_err());
    }

    #[test]
    fn skipped_oracle_cells() {
        let row = BenchRow {
            scenario: "chain".into(),
            size: 40,
            overlap: 0,
            dac_micros: 12.0,
            oracle_micros: None,
            results_equal: None,
            dac_min: -3.0,
            oracle_min: None,
        };
        let csv = CsvRow::from(&row);
        assert_eq!(csv.oracle_micros, "skipped");
        assert_eq!(csv.results_equal, "skipped");
    }
}
