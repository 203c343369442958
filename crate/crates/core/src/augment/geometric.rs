use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rotation angles (degrees) the baseline samples from.
pub const ROTATION_ANGLES: [u16; 8] = [30, 60, 90, 120, 150, 210, 240, 270];

/// A rotation angle from [`ROTATION_ANGLES`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u16", into = "u16")]
pub struct RotationAngle(u16);

impl RotationAngle {
    pub fn degrees(self) -> u16 {
        self.0
    }
}

impl TryFrom<u16> for RotationAngle {
    type Error = Error;

    fn try_from(deg: u16) -> Result<Self> {
        if ROTATION_ANGLES.contains(&deg) {
            Ok(RotationAngle(deg))
        } else {
            Err(Error::InvalidArgument(format!(
                "rotation angle {deg} not in {ROTATION_ANGLES:?}"
            )))
        }
    }
}

impl From<RotationAngle> for u16 {
    fn from(a: RotationAngle) -> u16 {
        a.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometricOp {
    Rotate { angle_degrees: RotationAngle },
    Hflip,
}

/// Per sample: three distinct rotations drawn without replacement, then one
/// horizontal flip.
pub fn geometric_plan(n_samples: usize, rng_seed: u64) -> Vec<(usize, [GeometricOp; 4])> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..n_samples)
        .map(|i| {
            let picks = rand::seq::index::sample(&mut rng, ROTATION_ANGLES.len(), 3);
            let rot = |k: usize| GeometricOp::Rotate {
                angle_degrees: RotationAngle(ROTATION_ANGLES[picks.index(k)]),
            };
            (i, [rot(0), rot(1), rot(2), GeometricOp::Hflip])
        })
        .collect()
}
