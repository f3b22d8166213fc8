//! Rendering of records and row lists as text, JSON or CSV.

use std::io::Write;

use anyhow::Result;
use serde_json::{Map, Value};

pub fn emit(s: &str) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(s.as_bytes())?;
    out.flush()
}

pub type Row = Map<String, Value>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

pub fn row(value: Value) -> Row {
    match value {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            m
        }
    }
}

pub fn record(format: Format, r: &Row) -> Result<()> {
    match format {
        Format::Json => outln!("{}", serde_json::to_string_pretty(r)?),
        Format::Csv => rows(format, std::slice::from_ref(r))?,
        Format::Text => {
            let width = r.keys().map(|k| k.len()).max().unwrap_or(0);
            for (k, v) in r {
                outln!("{k:<width$}  {}", text_cell(v));
            }
        }
    }
    Ok(())
}

pub fn rows(format: Format, rows: &[Row]) -> Result<()> {
    match format {
        Format::Json => outln!("{}", serde_json::to_string_pretty(rows)?),
        Format::Csv => out!("{}", csv_string(rows)?),
        Format::Text => out!("{}", text_table(rows)),
    }
    Ok(())
}

/// Column names in order of first appearance.
fn columns(rows: &[Row]) -> Vec<String> {
    let mut cols: Vec<String> = Vec::new();
    for r in rows {
        for k in r.keys() {
            if !cols.contains(k) {
                cols.push(k.clone());
            }
        }
    }
    cols
}

pub fn csv_string(rows: &[Row]) -> Result<String> {
    let cols = columns(rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&cols)?;
    for r in rows {
        w.write_record(cols.iter().map(|c| r.get(c).map(csv_cell).unwrap_or_default()))?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn text_table(rows: &[Row]) -> String {
    let cols = columns(rows);
    let cells: Vec<Vec<String>> =
        rows.iter().map(|r| cols.iter().map(|c| r.get(c).map(text_cell).unwrap_or_else(|| "-".into())).collect()).collect();
    let widths: Vec<usize> =
        cols.iter().enumerate().map(|(i, c)| cells.iter().map(|r| r[i].chars().count()).fold(c.len(), usize::max)).collect();
    let line = |items: &[String]| {
        let padded: Vec<String> = items.iter().zip(&widths).map(|(s, &w)| format!("{s:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(&cols);
    for r in &cells {
        out += &line(r);
    }
    out
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        other => other.to_string(),
    }
}

fn text_cell(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) if n.is_f64() => float(n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        other => other.to_string(),
    }
}

pub fn float(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.abs() < 1e-4 || x.abs() >= 1e6 {
        format!("{x:.3e}")
    } else {
        format!("{x:.8}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_has_header_and_quotes() {
        let rows = vec![row(json!({"a": 1.5, "b": "x,y"})), row(json!({"a": null, "c": true}))];
        let s = csv_string(&rows).unwrap();
        assert_eq!(s, "a,b,c\n1.5,\"x,y\",\n,,true\n");
    }

    #[test]
    fn floats_in_text() {
        assert_eq!(float(0.5), "0.50000000");
        assert_eq!(float(3.5e-9), "3.500e-9");
        assert_eq!(float(0.0), "0");
    }
}
