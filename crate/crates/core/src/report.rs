//! Report tables: build, render as text, and round-trip through CSV.
//!
//! Every analytics output is expressed as a [`Table`] — a row-label column
//! followed by value columns — emitted twice per report: a rendered text
//! table for terminals and a CSV file for downstream tooling. CSV is the
//! canonical form; `Table::from_csv(table.to_csv())` reproduces the table.

use std::collections::BTreeMap;
use std::path::Path;

use crate::trace::{normalize_across_datasets, percent_diff, CommandClass, TraceError};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A rectangular report table. `columns[0]` heads the row-label column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Placeholder for configurations that were not run.
pub const MISSING_CELL: &str = "--";

impl Table {
    pub fn new(title: impl Into<String>, columns: Vec<String>) -> Self {
        Table {
            title: title.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Render as an aligned monospace table with the title on top.
    pub fn render_text(&self) -> String {
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.chars().count()).collect();
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.chars().count());
            }
        }
        let render_row = |cells: &[String]| -> String {
            let mut line = String::new();
            for (i, cell) in cells.iter().enumerate() {
                if i > 0 {
                    line.push_str("  ");
                }
                if i == 0 {
                    // Row labels left-aligned, values right-aligned.
                    line.push_str(cell);
                    line.push_str(&" ".repeat(widths[i] - cell.chars().count()));
                } else {
                    line.push_str(&" ".repeat(widths[i] - cell.chars().count()));
                    line.push_str(cell);
                }
            }
            line.trim_end().to_string()
        };
        let mut out = String::new();
        out.push_str(&self.title);
        out.push('\n');
        out.push_str(&render_row(&self.columns));
        out.push('\n');
        let rule_len = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
        out.push_str(&"-".repeat(rule_len));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&render_row(row));
            out.push('\n');
        }
        out
    }

    /// Serialize as CSV: header row, then data rows. The title travels in the
    /// file name, not the CSV body.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.columns).expect("write to vec");
        for row in &self.rows {
            writer.write_record(row).expect("write to vec");
        }
        String::from_utf8(writer.into_inner().expect("flush to vec")).expect("csv is utf-8")
    }

    /// Parse a table back from [`Table::to_csv`] output.
    pub fn from_csv(title: impl Into<String>, text: &str) -> Result<Table, ReportError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(text.as_bytes());
        let columns: Vec<String> = reader
            .headers()
            .map_err(|e| ReportError::Csv(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if columns.is_empty() {
            return Err(ReportError::Csv("empty header".into()));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| ReportError::Csv(e.to_string()))?;
            rows.push(record.iter().map(str::to_string).collect());
        }
        Ok(Table {
            title: title.into(),
            columns,
            rows,
        })
    }

    /// Write `<name>.csv` and `<name>.txt` under `dir`.
    pub fn write_to(&self, dir: &Path, name: &str) -> Result<(), ReportError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{name}.csv")), self.to_csv())?;
        std::fs::write(dir.join(format!("{name}.txt")), self.render_text())?;
        Ok(())
    }
}

fn fmt_score(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.2}"),
        None => MISSING_CELL.to_string(),
    }
}

/// Main results: one row per method/configuration, one column per benchmark,
/// cells are the benchmark metric scaled to 0–100.
pub fn main_results_table(
    rows: &[(String, BTreeMap<String, f64>)],
    benchmarks: &[String],
) -> Table {
    let mut columns = vec!["Method".to_string()];
    columns.extend(benchmarks.iter().cloned());
    let mut table = Table::new("Main results (metric per benchmark)", columns);
    for (label, scores) in rows {
        let mut row = vec![label.clone()];
        for b in benchmarks {
            row.push(fmt_score(scores.get(b).copied()));
        }
        table.push_row(row);
    }
    table
}

/// Command usage means per configuration, with a trailing `Diff (%)` row when
/// comparing exactly two configurations (second relative to the first).
pub fn command_usage_table(
    rows: &[(String, BTreeMap<CommandClass, f64>)],
    classes: &[CommandClass],
) -> Table {
    let mut columns = vec!["Structure".to_string()];
    columns.extend(classes.iter().map(|c| c.label().to_string()));
    let mut table = Table::new("Average command usage counts", columns);
    for (label, means) in rows {
        let mut row = vec![label.clone()];
        for class in classes {
            row.push(format!("{:.2}", means.get(class).copied().unwrap_or(0.0)));
        }
        table.push_row(row);
    }
    if let [(_, baseline), (_, variant)] = rows {
        let mut row = vec!["Diff (%)".to_string()];
        for class in classes {
            let b = baseline.get(class).copied().unwrap_or(0.0);
            let v = variant.get(class).copied().unwrap_or(0.0);
            row.push(if b == 0.0 {
                MISSING_CELL.to_string()
            } else {
                format!("{:+.1}%", percent_diff(b, v))
            });
        }
        table.push_row(row);
    }
    table
}

/// Native search command means per retriever configuration.
pub fn native_search_table(rows: &[(String, f64)]) -> Table {
    let mut table = Table::new(
        "Agent exploration patterns across retriever configurations",
        vec!["Configuration".to_string(), "Native Search".to_string()],
    );
    for (label, mean) in rows {
        table.push_row(vec![label.clone(), format!("{mean:.2}")]);
    }
    table
}

/// Average cost per query: methods × benchmarks, cells in dollars.
pub fn cost_table(rows: &[(String, BTreeMap<String, f64>)], benchmarks: &[String]) -> Table {
    let mut columns = vec!["Method".to_string()];
    columns.extend(benchmarks.iter().cloned());
    let mut table = Table::new("Average cost per query", columns);
    for (label, costs) in rows {
        let mut row = vec![label.clone()];
        for b in benchmarks {
            row.push(match costs.get(b) {
                Some(usd) => format!("${usd:.3}"),
                None => MISSING_CELL.to_string(),
            });
        }
        table.push_row(row);
    }
    table
}

/// Strategy-characterization plot data: one row per metric, one column per
/// benchmark, each row normalized so its values sum to 1.
pub fn strategy_figure_table(
    metrics: &[(String, BTreeMap<String, f64>)],
    benchmarks: &[String],
) -> Result<Table, TraceError> {
    let mut columns = vec!["Metric".to_string()];
    columns.extend(benchmarks.iter().cloned());
    let mut table = Table::new(
        "Agent strategies per query (normalized proportions)",
        columns,
    );
    for (metric, values) in metrics {
        let normalized = normalize_across_datasets(values)?;
        let mut row = vec![metric.clone()];
        for b in benchmarks {
            row.push(format!("{:.6}", normalized.get(b).copied().unwrap_or(0.0)));
        }
        table.push_row(row);
    }
    Ok(table)
}
