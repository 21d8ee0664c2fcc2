//! File helpers: versioned JSON documents and the numeric CSV layouts.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hand::{JointConfig, JOINT_COUNT};

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    if let Some(parent) = path.as_ref().parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    std::fs::write(path.as_ref(), text).map_err(|e| Error::io(&path, e))
}

/// Reads a headed numeric CSV. Returns the header and the rows.
pub fn read_numeric_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
    parse_numeric_csv(&text)
}

pub fn parse_numeric_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != header.len() {
            return Err(Error::parse(
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(line, format!("`{f}` is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_numeric_csv(path: impl AsRef<Path>, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    write_text(path, &format_numeric_csv(header, rows)?)
}

pub fn format_numeric_csv(header: &[String], rows: &[Vec<f64>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| format!("{v}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// Header `t,q1,...,q6`.
pub fn demo_header() -> Vec<String> {
    std::iter::once("t".to_string())
        .chain((1..=JOINT_COUNT).map(|i| format!("q{i}")))
        .collect()
}

pub fn parse_demos_csv(text: &str) -> Result<Vec<JointConfig>> {
    let (header, rows) = parse_numeric_csv(text)?;
    if header != demo_header() {
        return Err(Error::parse(1, format!("expected header {}", demo_header().join(","))));
    }
    rows.iter()
        .map(|r| {
            let mut q = JointConfig::from_slice(&r[1..])?;
            q.timestamp = Some(r[0]);
            Ok(q)
        })
        .collect()
}

pub fn read_demos_csv(path: impl AsRef<Path>) -> Result<Vec<JointConfig>> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
    parse_demos_csv(&text)
}

pub fn write_demos_csv(path: impl AsRef<Path>, demos: &[JointConfig]) -> Result<()> {
    let rows: Vec<Vec<f64>> = demos
        .iter()
        .map(|q| {
            std::iter::once(q.timestamp.unwrap_or(0.0))
                .chain(q.angles.iter().copied())
                .collect()
        })
        .collect();
    write_numeric_csv(path, &demo_header(), &rows)
}

/// Header `t,e1,...,eS`.
pub fn coeff_header(s: usize) -> Vec<String> {
    std::iter::once("t".to_string())
        .chain((1..=s).map(|i| format!("e{i}")))
        .collect()
}
