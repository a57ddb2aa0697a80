// SPDX-License-Identifier: MIT OR Apache-2.0

//! Single-column CSV signals and matrix files.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::CliError;

fn open(path: &Path) -> Result<csv::Reader<File>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("{}: cannot open: {e}", path.display())))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn records(path: &Path) -> Result<Vec<csv::StringRecord>, CliError> {
    open(path)?
        .records()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| CliError::Data(format!("{}: row {}: {e}", path.display(), i + 1))))
        .collect()
}

fn parse_cell(path: &Path, row: usize, col: usize, cell: &str) -> Result<f64, CliError> {
    let v: f64 = cell.parse().map_err(|_| {
        CliError::Data(format!(
            "{}: row {row}, column {col}: '{cell}' is not a number",
            path.display()
        ))
    })?;
    if !v.is_finite() {
        return Err(CliError::Data(format!(
            "{}: row {row}, column {col}: value is not finite",
            path.display()
        )));
    }
    Ok(v)
}

/// Reads the `value` column, or the first column when no header names one.
/// A first row is a header when any of its cells is not a number.
pub fn read_signal(path: &Path) -> Result<Vec<f64>, CliError> {
    let rows = records(path)?;
    let Some(first) = rows.first() else {
        return Err(CliError::Data(format!("{}: file has no rows", path.display())));
    };
    let header = first.iter().any(|c| c.parse::<f64>().is_err());
    let col = if header { first.iter().position(|c| c == "value").unwrap_or(0) } else { 0 };
    let skip = usize::from(header);
    let values = rows
        .iter()
        .enumerate()
        .skip(skip)
        .map(|(i, r)| {
            let cell = r.get(col).ok_or_else(|| {
                CliError::Data(format!("{}: row {}: missing column {}", path.display(), i + 1, col + 1))
            })?;
            parse_cell(path, i + 1, col + 1, cell)
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    Ok(values)
}

/// Reads a headerless numeric matrix; returns (rows, cols, row-major entries).
pub fn read_matrix(path: &Path) -> Result<(usize, usize, Vec<f64>), CliError> {
    let rows = records(path)?;
    let cols = rows.first().map(|r| r.len()).unwrap_or(0);
    if cols == 0 {
        return Err(CliError::Data(format!("{}: matrix is empty", path.display())));
    }
    let mut entries = Vec::with_capacity(rows.len() * cols);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(CliError::Data(format!(
                "{}: row {} has {} columns, expected {cols}",
                path.display(),
                i + 1,
                r.len()
            )));
        }
        for (j, cell) in r.iter().enumerate() {
            entries.push(parse_cell(path, i + 1, j + 1, cell)?);
        }
    }
    Ok((rows.len(), cols, entries))
}

/// Writes `index,estimate` rows with 1-based indices.
pub fn write_estimate<W: Write>(values: &[f64], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Data(format!("cannot write output: {e}"));
    w.write_record(["index", "estimate"]).map_err(io)?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([(i + 1).to_string(), v.to_string()]).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Data(format!("cannot write output: {e}")))
}
