//! Command results and their JSON/CSV rendering.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        self.rows.push(row);
    }

    fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.header.iter().cloned().zip(r.iter().cloned()).collect()))
            .collect();
        Value::Array(rows)
    }
}

/// Result of one command: a JSON summary, an optional table, and whether a
/// verification it performed failed.
#[derive(Debug, Clone)]
pub struct Output {
    pub summary: Value,
    pub table: Option<Table>,
    /// The table only restates the summary and is left out of JSON output.
    pub table_csv_only: bool,
    pub verification_failed: bool,
}

impl Output {
    pub fn summary(summary: Value) -> Self {
        Self { summary, table: None, table_csv_only: false, verification_failed: false }
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    pub fn with_csv_view(mut self, table: Table) -> Self {
        self.table = Some(table);
        self.table_csv_only = true;
        self
    }

    pub fn failing_if(mut self, failed: bool) -> Self {
        self.verification_failed = failed;
        self
    }

    fn to_json(&self) -> Value {
        let mut v = self.summary.clone();
        if let (Some(t), Value::Object(map), false) = (&self.table, &mut v, self.table_csv_only) {
            map.insert("table".into(), t.to_json());
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Floats with 17 significant digits; other values as their JSON text
/// without quotes.
pub fn csv_cell(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{x:.16e}"),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn write_csv(out: &mut dyn Write, header: &[String], rows: &[Vec<Value>]) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(csv_cell))?;
    }
    w.flush()
}

/// Renders one output, or a batch of outputs in input order.
pub fn render(outputs: &[Output], batch: bool, format: Format) -> std::io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        Format::Json => {
            let doc = if batch {
                Value::Array(outputs.iter().map(Output::to_json).collect())
            } else {
                outputs.first().map(Output::to_json).unwrap_or(Value::Null)
            };
            serde_json::to_writer_pretty(&mut buf, &doc)?;
            buf.push(b'\n');
        }
        Format::Csv => {
            let tables: Vec<Table> = outputs.iter().map(|o| o.table.clone().unwrap_or_else(|| summary_table(&o.summary))).collect();
            if batch {
                let mut header = vec!["index".to_string()];
                header.extend(tables.first().map(|t| t.header.clone()).unwrap_or_default());
                let rows: Vec<Vec<Value>> = tables
                    .iter()
                    .enumerate()
                    .flat_map(|(i, t)| t.rows.iter().map(move |r| std::iter::once(json!(i)).chain(r.iter().cloned()).collect()))
                    .collect();
                write_csv(&mut buf, &header, &rows)?;
            } else if let Some(t) = tables.first() {
                write_csv(&mut buf, &t.header, &t.rows)?;
            }
        }
    }
    Ok(buf)
}

/// One-row table of the scalar fields of a summary object.
fn summary_table(summary: &Value) -> Table {
    let mut t = Table::default();
    if let Value::Object(map) = summary {
        let mut row = Vec::new();
        for (k, v) in map {
            if !v.is_object() && !v.is_array() {
                t.header.push(k.clone());
                row.push(v.clone());
            }
        }
        t.rows.push(row);
    }
    t
}

pub fn emit(bytes: &[u8], path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        let x = 0.1f64 + 0.2;
        let cell = csv_cell(&json!(x));
        assert_eq!(cell.parse::<f64>().unwrap(), x);
        assert_eq!(cell, "3.0000000000000004e-1");
        assert_eq!(csv_cell(&json!(3)), "3");
        assert_eq!(csv_cell(&json!("Existence")), "Existence");
    }

    #[test]
    fn batch_csv_prefixes_index() {
        let mut t = Table::new(&["a"]);
        t.push(vec![json!(1.5)]);
        let o = Output::summary(json!({})).with_table(t);
        let text = String::from_utf8(render(&[o.clone(), o], true, Format::Csv).unwrap()).unwrap();
        assert_eq!(text, "index,a\n0,1.5000000000000000e0\n1,1.5000000000000000e0\n");
    }
}
