//! Latent code edits `z' = z + α·uᵢ` and a linear stand-in generator.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::directions::DirectionSet;
use crate::error::{Error, Result};

/// A point in the generator's latent space.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentCode(Array1<f64>);

impl LatentCode {
    pub fn new(z: Array1<f64>) -> Result<Self> {
        if z.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("latent code"));
        }
        Ok(LatentCode(z))
    }

    /// Standard-normal sample drawn from `rng`.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Self {
        LatentCode((0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_array(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn into_array(self) -> Array1<f64> {
        self.0
    }
}

/// One edit: move along direction `direction_index` by `alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditSpec {
    pub direction_index: usize,
    pub alpha: f64,
}

/// `z + α·u_{index}`. `z` is left untouched.
pub fn apply_edit(z: &LatentCode, dirs: &DirectionSet, edit: EditSpec) -> Result<LatentCode> {
    if z.dim() != dirs.latent_dim() {
        return Err(Error::DimensionMismatch(format!(
            "latent code has dim {}, directions have {}",
            z.dim(),
            dirs.latent_dim()
        )));
    }
    if edit.direction_index >= dirs.count() {
        return Err(Error::IndexOutOfRange {
            index: edit.direction_index,
            count: dirs.count(),
        });
    }
    if !edit.alpha.is_finite() {
        return Err(Error::NonFinite("edit magnitude"));
    }
    let u = dirs.direction(edit.direction_index);
    let mut out = z.0.clone();
    out.scaled_add(edit.alpha, &u);
    LatentCode::new(out)
}

/// Applies every `alpha` to every code along one direction.
///
/// Output order is code-major: `(z₀,α₀), (z₀,α₁), …, (z₁,α₀), …`.
pub fn apply_edit_batch(
    codes: &[LatentCode],
    dirs: &DirectionSet,
    direction_index: usize,
    alphas: &[f64],
) -> Result<Vec<LatentCode>> {
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("at least one alpha is required".into()));
    }
    let mut out = Vec::with_capacity(codes.len() * alphas.len());
    for z in codes {
        for &alpha in alphas {
            out.push(apply_edit(
                z,
                dirs,
                EditSpec {
                    direction_index,
                    alpha,
                },
            )?);
        }
    }
    Ok(out)
}

/// Maps a latent code to an output vector.
pub trait Generator {
    fn latent_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn generate(&self, z: &LatentCode) -> Result<Array1<f64>>;
}

/// Affine generator `y = M z + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyGenerator {
    matrix: Array2<f64>,
    bias: Array1<f64>,
}

impl ToyGenerator {
    pub fn new(matrix: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::DimensionMismatch(
                "toy generator needs a non-empty matrix".into(),
            ));
        }
        if bias.len() != matrix.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "bias has length {}, matrix has {} rows",
                bias.len(),
                matrix.nrows()
            )));
        }
        if matrix.iter().chain(bias.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("toy generator"));
        }
        Ok(ToyGenerator { matrix, bias })
    }

    /// Gaussian matrix entries scaled by `1/√latent_dim`, zero bias.
    pub fn random(output_dim: usize, latent_dim: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (latent_dim.max(1) as f64).sqrt();
        let matrix = Array2::from_shape_simple_fn((output_dim, latent_dim), || {
            rng.sample::<f64, _>(StandardNormal) * scale
        });
        ToyGenerator::new(matrix, Array1::zeros(output_dim))
    }

    /// The weight matrix, one row per output unit.
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }
}

impl Generator for ToyGenerator {
    fn latent_dim(&self) -> usize {
        self.matrix.ncols()
    }

    fn output_dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn generate(&self, z: &LatentCode) -> Result<Array1<f64>> {
        toy_generate(self, z)
    }
}

/// `M z + b`.
pub fn toy_generate(g: &ToyGenerator, z: &LatentCode) -> Result<Array1<f64>> {
    if z.dim() != g.matrix.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "latent code has dim {}, generator expects {}",
            z.dim(),
            g.matrix.ncols()
        )));
    }
    Ok(g.matrix.dot(z.as_array()) + &g.bias)
}
