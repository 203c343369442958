//! Versioned JSON manifests describing a saved [`DirectionSet`].
//!
//! A manifest sits next to an `LDM1` file holding the directions (one per
//! row) and records that file's SHA-256 so loads can be verified.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{decode_matrix, encode_matrix, sha256_hex, write_atomic};
use crate::directions::{DirectionParams, DirectionSet, Method};
use crate::error::{Error, Result};

pub const MANIFEST_FORMAT: &str = "latdir-directions";
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DIRECTIONS_FILE: &str = "directions.ldm";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixRef {
    /// Relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
    pub rows: usize,
    pub cols: usize,
}

/// Where the directions came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceInfo {
    pub weights_sha256: String,
    pub n_points: usize,
    pub latent_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionManifest {
    pub format: String,
    pub format_version: u32,
    pub toolkit_version: String,
    pub method: Method,
    pub latent_dim: usize,
    pub count: usize,
    pub params: DirectionParams,
    /// Always `unit_euclidean`: stored directions have `‖u‖ = 1`.
    pub normalization: String,
    pub eigenvalues: Vec<f64>,
    /// Indices of directions with negligible eigenvalues.
    pub trivial_indices: Vec<usize>,
    pub directions: MatrixRef,
    pub source: Option<SourceInfo>,
}

impl DirectionManifest {
    pub fn describe(set: &DirectionSet, directions: MatrixRef, source: Option<SourceInfo>) -> Self {
        DirectionManifest {
            format: MANIFEST_FORMAT.into(),
            format_version: MANIFEST_VERSION,
            toolkit_version: env!("CARGO_PKG_VERSION").into(),
            method: set.method(),
            latent_dim: set.latent_dim(),
            count: set.count(),
            params: set.params().clone(),
            normalization: "unit_euclidean".into(),
            eigenvalues: set.eigenvalues().to_vec(),
            trivial_indices: set
                .trivial()
                .iter()
                .enumerate()
                .filter_map(|(i, &t)| t.then_some(i))
                .collect(),
            directions,
            source,
        }
    }
}

/// Writes `directions.ldm` and `manifest.json` into `dir` (created if
/// missing) and returns the manifest path.
pub fn write_direction_set(
    dir: impl AsRef<Path>,
    set: &DirectionSet,
    source: Option<SourceInfo>,
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let payload = encode_matrix(set.directions());
    let matrix_ref = MatrixRef {
        path: DIRECTIONS_FILE.into(),
        sha256: sha256_hex(&payload),
        rows: set.count(),
        cols: set.latent_dim(),
    };
    write_atomic(&dir.join(DIRECTIONS_FILE), &payload)?;
    let manifest = DirectionManifest::describe(set, matrix_ref, source);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    let path = dir.join(MANIFEST_FILE);
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

/// Loads a manifest and its direction payload, verifying the content hash
/// and every length.
pub fn read_direction_set(manifest_path: impl AsRef<Path>) -> Result<(DirectionSet, DirectionManifest)> {
    let manifest_path = manifest_path.as_ref();
    let text = std::fs::read_to_string(manifest_path)?;
    let manifest: DirectionManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Manifest(format!("{}: {e}", manifest_path.display())))?;
    if manifest.format != MANIFEST_FORMAT {
        return Err(Error::Manifest(format!("unknown format {:?}", manifest.format)));
    }
    if manifest.format_version != MANIFEST_VERSION {
        return Err(Error::Manifest(format!(
            "unsupported format_version {}",
            manifest.format_version
        )));
    }
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let payload_path = base.join(&manifest.directions.path);
    let bytes = std::fs::read(&payload_path)?;
    let found = sha256_hex(&bytes);
    if found != manifest.directions.sha256 {
        return Err(Error::HashMismatch {
            path: payload_path.display().to_string(),
            expected: manifest.directions.sha256.clone(),
            found,
        });
    }
    let directions: Array2<f64> = decode_matrix(&bytes)?;
    let shape_ok = directions.dim() == (manifest.directions.rows, manifest.directions.cols)
        && manifest.count == manifest.directions.rows
        && manifest.latent_dim == manifest.directions.cols
        && manifest.eigenvalues.len() == manifest.count;
    if !shape_ok {
        return Err(Error::Manifest(format!(
            "inconsistent lengths: count {}, latent_dim {}, {} eigenvalues, payload {:?}",
            manifest.count,
            manifest.latent_dim,
            manifest.eigenvalues.len(),
            directions.dim()
        )));
    }
    let set = DirectionSet::from_parts(
        manifest.method,
        directions,
        manifest.eigenvalues.clone(),
        manifest.params.clone(),
    )?;
    Ok((set, manifest))
}
