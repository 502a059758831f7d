//! Table serialization. CSV and JSON carry the same rows; floats use
//! shortest-roundtrip formatting so rewriting a file never perturbs it.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::Format;
use crate::CliError;

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut buf = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    buf.push(b'\n');
    Ok(buf)
}

/// Renders `rows` in `format` and writes them to `out` (stdout if None).
/// Returns the byte count for the summary line.
pub fn write_table<T: Serialize>(
    rows: &[T],
    format: Format,
    out: Option<&Path>,
) -> Result<usize, CliError> {
    let bytes = match format {
        Format::Csv => csv_bytes(rows)?,
        Format::Json => json_bytes(&rows)?,
    };
    deliver(&bytes, out)
}

/// A single record: CSV still gets a header row, JSON gets one object
/// rather than a one-element array.
pub fn write_record<T: Serialize>(
    record: &T,
    format: Format,
    out: Option<&Path>,
) -> Result<usize, CliError> {
    let bytes = match format {
        Format::Csv => csv_bytes(std::slice::from_ref(record))?,
        Format::Json => json_bytes(record)?,
    };
    deliver(&bytes, out)
}

fn deliver(bytes: &[u8], out: Option<&Path>) -> Result<usize, CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Io(e.to_string()))?,
    }
    Ok(bytes.len())
}
