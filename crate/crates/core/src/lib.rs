//! Latent direction discovery for generator weight matrices.
//!
//! Two families of directions are computed from a weight matrix `A`
//! (one weight vector per row):
//!
//! * PCA directions: the top eigenvectors of the uncentered `AᵀA`.
//! * Locality-preserving (LPP) directions: the smallest generalized
//!   eigenvectors of `Aᵀ L A u = λ Aᵀ D A u`, where `L = D − W` is the
//!   Laplacian of a k-nearest-neighbor graph over the rows of `A`.
//!
//! Around that core sit latent editing (`z' = z + αu`), a linear toy
//! generator, deterministic augmentation planning/execution, and the
//! on-disk formats used by the `latdir` command-line tool.

pub mod augment;
pub mod directions;
pub mod editor;
pub mod error;
pub mod graph;
pub mod io;
pub mod spectral;

pub use error::{Error, Result};
