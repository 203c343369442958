//! File formats: `LDM1` matrices and direction-set manifests.

mod manifest;
mod matrix;

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::Result;

pub use manifest::{
    read_direction_set, write_direction_set, DirectionManifest, MatrixRef, SourceInfo,
    MANIFEST_FILE, MANIFEST_FORMAT, MANIFEST_VERSION, DIRECTIONS_FILE,
};
pub use matrix::{
    decode_matrix, encode_matrix, read_matrix, write_matrix, write_matrix_with, WriteOptions,
    HEADER_LEN, MAGIC,
};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..])
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;

    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
