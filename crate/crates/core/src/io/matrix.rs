//! The `LDM1` dense matrix file format.
//!
//! Layout (all little-endian):
//!
//! | offset | size | content                       |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `LDM1`                  |
//! | 4      | 8    | row count (u64)               |
//! | 12     | 8    | column count (u64)            |
//! | 20     | 8·rc | row-major IEEE-754 f64 values |
//!
//! Files without the magic are parsed as CSV: one row per line,
//! comma-separated decimal values.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LDM1";
pub const HEADER_LEN: usize = 20;

/// Serializes `m` into `LDM1` bytes.
pub fn encode_matrix(m: &Array2<f64>) -> Vec<u8> {
    let (rows, cols) = m.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + rows * cols * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for x in m.iter() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

/// Parses `LDM1` bytes, falling back to CSV when the magic is absent.
pub fn decode_matrix(bytes: &[u8]) -> Result<Array2<f64>> {
    if bytes.starts_with(MAGIC) {
        decode_binary(bytes)
    } else {
        decode_csv(bytes)
    }
}

fn decode_binary(bytes: &[u8]) -> Result<Array2<f64>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedPayload {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let rows = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let payload = &bytes[HEADER_LEN..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or(Error::TruncatedPayload {
            expected: u64::MAX,
            found: payload.len() as u64,
        })?;
    if payload.len() as u64 != expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len() as u64,
        });
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Array2::from_shape_vec((rows as usize, cols as usize), values)
        .expect("payload length checked"))
}

fn decode_csv(bytes: &[u8]) -> Result<Array2<f64>> {
    let head: String = String::from_utf8_lossy(&bytes[..bytes.len().min(4)]).into_owned();
    let bad = |detail: String| Error::BadMagic(format!("starts with {head:?}: {detail}"));
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(bad("empty file".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(bad(format!(
                    "line {} has {} fields, expected {c}",
                    line + 1,
                    record.len()
                )))
            }
            _ => {}
        }
        for field in record.iter() {
            let x: f64 = field
                .parse()
                .map_err(|_| bad(format!("line {}: cannot parse {field:?}", line + 1)))?;
            values.push(x);
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    Ok(Array2::from_shape_vec((rows, cols), values).expect("rectangular csv"))
}

/// Options for [`write_matrix_with`].
#[derive(Clone, Copy, Debug, Default)]
pub struct WriteOptions {
    pub allow_nonfinite: bool,
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Array2<f64>) -> Result<()> {
    write_matrix_with(path, m, WriteOptions::default())
}

pub fn write_matrix_with(path: impl AsRef<Path>, m: &Array2<f64>, opts: WriteOptions) -> Result<()> {
    if !opts.allow_nonfinite && m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix to write"));
    }
    super::write_atomic(path.as_ref(), &encode_matrix(m))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let bytes = std::fs::read(path)?;
    decode_matrix(&bytes)
}
