//! Tabular results and their CSV, JSON and text renderings.
//!
//! CSV carries every real as `{:.16e}` (17 significant digits, enough to
//! round-trip an f64). JSON uses the shortest round-tripping representation.
//! Text mode is for reading: probabilities to four decimals, everything else
//! in short scientific notation.

use serde_json::{Map, Value};

use crate::config::OutputFormat;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextStyle {
    /// Fixed-point with this many decimals.
    Fixed(usize),
    /// Scientific with this many decimals in the mantissa.
    Sci(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: &'static str,
    pub style: TextStyle,
}

impl Column {
    pub const fn fixed(name: &'static str, decimals: usize) -> Self {
        Self {
            name,
            style: TextStyle::Fixed(decimals),
        }
    }

    pub const fn sci(name: &'static str) -> Self {
        Self {
            name,
            style: TextStyle::Sci(4),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Real(f64),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => format!("{x:.16e}"),
        }
    }

    fn text(&self, style: TextStyle) -> String {
        match (self, style) {
            (Cell::Text(s), _) => s.clone(),
            (Cell::Int(i), _) => i.to_string(),
            (Cell::Real(x), TextStyle::Fixed(d)) => format!("{x:.d$}"),
            (Cell::Real(x), TextStyle::Sci(d)) => format!("{x:.d$e}"),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(i) => Value::from(*i),
            Cell::Real(x) => Value::from(*x),
        }
    }
}

/// A titled table plus free-form metadata that only the JSON form carries.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub title: String,
    pub meta: Map<String, Value>,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(title: impl Into<String>, columns: Vec<Column>) -> Self {
        Self {
            title: title.into(),
            meta: Map::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: OutputFormat) -> CliResult<String> {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => Ok(self.to_json()),
            OutputFormat::Text => Ok(self.to_text()),
        }
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Usage(format!("csv encoding failed: {e}"));
        w.write_record(self.columns.iter().map(|c| c.name)).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(fail)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Usage(format!("csv encoding failed: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is built from UTF-8 strings"))
    }

    pub fn to_json(&self) -> String {
        let mut doc = Map::new();
        doc.insert("title".into(), Value::String(self.title.clone()));
        for (k, v) in &self.meta {
            doc.insert(k.clone(), v.clone());
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    self.columns
                        .iter()
                        .zip(row)
                        .map(|(c, cell)| (c.name.to_string(), cell.json()))
                        .collect(),
                )
            })
            .collect();
        doc.insert("rows".into(), Value::Array(rows));
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values always serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| {
                self.columns
                    .iter()
                    .zip(row)
                    .map(|(c, cell)| cell.text(c.style))
                    .collect()
            })
            .collect();
        let widths: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| {
                cells
                    .iter()
                    .map(|r| r[i].chars().count())
                    .chain([c.name.len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let left: Vec<bool> = (0..self.columns.len())
            .map(|i| self.rows.first().is_some_and(|r| matches!(r[i], Cell::Text(_))))
            .collect();

        let line = |items: &[String]| {
            let parts: Vec<String> = items
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    if left[i] {
                        format!("{s:<w$}", w = widths[i])
                    } else {
                        format!("{s:>w$}", w = widths[i])
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string()
        };

        let mut out = String::new();
        out.push_str(&self.title);
        out.push('\n');
        let header: Vec<String> = self.columns.iter().map(|c| c.name.to_string()).collect();
        out.push_str(&line(&header));
        out.push('\n');
        for row in &cells {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }
}
