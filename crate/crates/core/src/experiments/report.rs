use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use super::config::Method;
use super::grid::ExperimentRecord;
use crate::numeric::quantile;

pub const CSV_HEADER: &str = "method,n_p,n_q,seed,excess_risk,wallclock_ms,flags";

/// Ten significant digits in scientific notation; `NaN` for missing values.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.9e}")
    }
}

pub fn write_csv_to<W: Write>(records: &[ExperimentRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        let flags: Vec<String> = r.flags.iter().map(ToString::to_string).collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.method,
            r.n_p,
            r.n_q,
            r.seed,
            format_float(r.excess_risk),
            format_float(r.wallclock_ms),
            flags.join(";")
        )?;
    }
    w.flush()
}

pub fn write_csv(records: &[ExperimentRecord], path: impl AsRef<Path>) -> io::Result<()> {
    write_csv_to(records, BufWriter::new(File::create(path)?))
}

/// Median and quartiles of one `(method, n_P, n_Q)` cell over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub method: Method,
    pub n_p: usize,
    pub n_q: usize,
    pub runs: usize,
    /// Rows with NaN excess risk; excluded from the statistics.
    pub failures: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl CellSummary {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SummaryTable {
    pub cells: Vec<CellSummary>,
}

impl SummaryTable {
    pub fn get(&self, method: Method, n_p: usize, n_q: usize) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.n_p == n_p && c.n_q == n_q)
    }

    /// Cells of one method in first-appearance order.
    pub fn method(&self, method: Method) -> Vec<&CellSummary> {
        self.cells.iter().filter(|c| c.method == method).collect()
    }

    pub fn total_failures(&self) -> usize {
        self.cells.iter().map(|c| c.failures).sum()
    }
}

impl fmt::Display for SummaryTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<14} {:>6} {:>6} {:>5} {:>12} {:>12} {:>12} {:>8}",
            "method", "n_p", "n_q", "runs", "median", "q1", "q3", "failures"
        )?;
        for c in &self.cells {
            writeln!(
                f,
                "{:<14} {:>6} {:>6} {:>5} {:>12.6} {:>12.6} {:>12.6} {:>8}",
                c.method.as_str(),
                c.n_p,
                c.n_q,
                c.runs,
                c.median,
                c.q1,
                c.q3,
                c.failures
            )?;
        }
        Ok(())
    }
}

/// Groups records by `(method, n_P, n_Q)` in first-appearance order.
pub fn summarize(records: &[ExperimentRecord]) -> SummaryTable {
    let mut keys: Vec<(Method, usize, usize)> = Vec::new();
    for r in records {
        let k = (r.method, r.n_p, r.n_q);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let cells = keys
        .into_iter()
        .map(|(method, n_p, n_q)| {
            let rows: Vec<&ExperimentRecord> = records
                .iter()
                .filter(|r| r.method == method && r.n_p == n_p && r.n_q == n_q)
                .collect();
            let values: Vec<f64> = rows.iter().map(|r| r.excess_risk).filter(|v| !v.is_nan()).collect();
            CellSummary {
                method,
                n_p,
                n_q,
                runs: rows.len(),
                failures: rows.len() - values.len(),
                median: quantile(&values, 0.5),
                q1: quantile(&values, 0.25),
                q3: quantile(&values, 0.75),
            }
        })
        .collect();
    SummaryTable { cells }
}
