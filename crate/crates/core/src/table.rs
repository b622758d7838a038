//! Numeric CSV matrices and label columns. A first row containing any
//! non-numeric field is taken as a header.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn records(text: &str) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        out.push((k + 1, rec));
    }
    if let Some((_, first)) = out.first() {
        if first.iter().any(|f| f.parse::<f64>().is_err()) {
            out.remove(0);
        }
    }
    Ok(out)
}

/// Parses one sample per row.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let rows = records(text)?;
    let Some((_, first)) = rows.first() else {
        return Err(Error::InvalidArgument("matrix CSV has no data rows".into()));
    };
    let width = first.len();
    let mut values = Vec::with_capacity(rows.len() * width);
    for (line, rec) in &rows {
        if rec.len() != width {
            return Err(Error::Parse {
                line: *line,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        for field in rec {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line: *line,
                message: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: *line,
                    message: format!("non-finite value {field:?}"),
                });
            }
            values.push(v);
        }
    }
    Ok(DMatrix::from_row_slice(rows.len(), width, &values))
}

/// Parses the first column as nonnegative integer labels.
pub fn parse_labels(text: &str) -> Result<Vec<usize>> {
    let rows = records(text)?;
    if rows.is_empty() {
        return Err(Error::InvalidArgument("label CSV has no data rows".into()));
    }
    rows.iter()
        .map(|(line, rec)| {
            let field = rec.get(0).unwrap_or("");
            field.parse().map_err(|_| Error::Parse {
                line: *line,
                message: format!("not a label index: {field:?}"),
            })
        })
        .collect()
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    parse_labels(&std::fs::read_to_string(path)?)
}
