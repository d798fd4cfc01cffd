//! Numeric CSV tables with an optional header row.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub data: DMatrix<f64>,
}

fn validation(path: &Path, row: usize, message: String) -> Error {
    Error::Validation {
        file: path.to_path_buf(),
        row,
        message,
    }
}

/// Parses CSV bytes into a dense matrix. The first record is a header when
/// any of its fields fails to parse as a number. Row numbers in errors are
/// 1-based file lines.
pub fn parse_table(bytes: &[u8], path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Vec<Option<f64>> = record.iter().map(|f| f.parse::<f64>().ok()).collect();
        if idx == 0 && parsed.iter().any(Option::is_none) {
            header = Some(record.iter().map(str::to_string).collect::<Vec<_>>());
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(validation(
                path,
                line,
                format!("expected {expected} fields, found {}", record.len()),
            ));
        }
        let mut values = Vec::with_capacity(expected);
        for (col, (field, v)) in record.iter().zip(parsed).enumerate() {
            match v {
                Some(v) if v.is_finite() => values.push(v),
                Some(_) => {
                    return Err(validation(path, line, format!("non-finite entry {field:?} in column {}", col + 1)))
                }
                None => return Err(validation(path, line, format!("non-numeric entry {field:?} in column {}", col + 1))),
            }
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(validation(path, 0, "no data rows".into()));
    }
    let ncols = width.unwrap_or(0);
    let data = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
    Ok(Table { header, data })
}

pub fn read_table(path: &Path) -> Result<Table> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_table(&bytes, path)
}

/// Shortest round-trip decimal form, so equal values always print equally.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

/// CSV text for a header plus rows of already formatted fields.
pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Csv {
        path: "<memory>".into(),
        message: e.to_string(),
    };
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Csv {
        path: "<memory>".into(),
        message: e.to_string(),
    })
}

/// CSV text for a numeric matrix with the given column names.
pub fn matrix_csv(header: &[String], m: &DMatrix<f64>) -> Result<Vec<u8>> {
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = m
        .row_iter()
        .map(|r| r.iter().map(|&v| format_number(v)).collect())
        .collect();
    csv_text(&h, &rows)
}
