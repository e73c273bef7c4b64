//! Matrix and vector files.
//!
//! * CSV: one matrix row per line, comma-separated decimals, no header.
//! * Binary: `u32` rows, `u32` cols (little endian), then `rows * cols`
//!   little-endian `f64` entries in column-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::Matrix;
use crate::error::{Error, Result};

const HEADER_LEN: usize = 8;

pub fn parse_matrix_csv<R: Read>(reader: R) -> Result<Matrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let row = record
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: '{s}': {e}", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty matrix file".into()));
    }
    Matrix::from_rows(&rows)
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Matrix> {
    parse_matrix_csv(BufReader::new(File::open(path)?))
}

pub fn write_matrix_csv<W: Write>(phi: &Matrix, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for row in phi.to_rows() {
        w.write_record(row.iter().map(|v| format!("{v:e}")))
            .map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn decode_matrix_binary(bytes: &[u8]) -> Result<Matrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Parse("binary matrix shorter than its header".into()));
    }
    let rows = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let payload = &bytes[HEADER_LEN..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| Error::Parse("binary matrix header overflows".into()))?;
    if payload.len() != expected {
        return Err(Error::Parse(format!(
            "binary matrix {rows}x{cols} needs {expected} payload bytes, found {}",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::from_column_major(rows, cols, data)
}

pub fn encode_matrix_binary(phi: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * phi.as_column_major().len());
    out.extend_from_slice(&(phi.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(phi.cols() as u32).to_le_bytes());
    for v in phi.as_column_major() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_matrix_binary(path: impl AsRef<Path>) -> Result<Matrix> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_matrix_binary(&bytes)
}

pub fn write_matrix_binary(phi: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode_matrix_binary(phi))?;
    w.flush()?;
    Ok(())
}

/// Reads a matrix, choosing the format from the extension (`.bin` is binary,
/// anything else CSV).
pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => read_matrix_binary(path),
        _ => read_matrix_csv(path),
    }
}

/// Reads a vector stored either as one value per line or as a single row.
pub fn read_vector_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let m = read_matrix_csv(path)?;
    if m.rows() == 1 || m.cols() == 1 {
        Ok(m.as_column_major().to_vec())
    } else {
        Err(Error::Parse(format!(
            "expected a vector, found a {}x{} matrix",
            m.rows(),
            m.cols()
        )))
    }
}
