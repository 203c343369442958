use serde::{Deserialize, Serialize};

use super::dataset::DatasetVariantSpec;
use super::oracle::ClassId;
use crate::directions::Method;
use crate::error::{Error, Result};
use crate::io::sha256_hex;

/// Upper bound on acceptance rounds for a whole run.
pub const DEFAULT_MAX_ROUNDS: usize = 50;
/// Three rotations plus one flip per original image.
pub const GEOMETRIC_EXTRAS_PER_PASS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    GeometricBaseline,
    DirectionBased,
    Mixed,
}

/// Who decides the label of an edited sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Labeling {
    /// Every edit is classified and filtered on its own.
    FilterLabel,
    /// Only the unedited seed is classified; its label covers all edits.
    SeedLabel,
}

/// A fully deterministic augmentation schedule. Construction is pure; see
/// `execute_plan` for what a plan does when run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentationPlan {
    pub protocol: Protocol,
    pub method: Option<Method>,
    pub direction_index: usize,
    pub alphas: Vec<f64>,
    pub filter_threshold: Option<f64>,
    pub labeling: Labeling,
    pub variant: DatasetVariantSpec,
    pub imbalanced_classes: Vec<ClassId>,
    /// Seeds drawn per imbalanced class in each round.
    pub seeds_per_class: usize,
    pub target_multiplier: usize,
    pub geometric_passes: usize,
    pub max_rounds: usize,
    pub rng_seed: u64,
}

/// Per imbalanced class sample counts a plan aims for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanTargets {
    pub original: usize,
    pub geometric_extras: usize,
    pub direction_extras: usize,
    pub final_size: usize,
}

impl PlanTargets {
    pub fn multiplier(&self) -> usize {
        self.final_size / self.original
    }
}

/// Edits along one direction, filtered by the classifier.
///
/// The run targets `train_per_imbalanced × multiplier` per imbalanced class.
pub fn direction_plan(
    variant: &DatasetVariantSpec,
    method: Method,
    alphas: &[f64],
    threshold: Option<f64>,
    labeling: Labeling,
    multiplier: usize,
    rng_seed: u64,
) -> Result<AugmentationPlan> {
    build(Protocol::DirectionBased, variant, Some(method), alphas, threshold, labeling, multiplier, 0, rng_seed)
}

/// One geometric pass (4 extras per image) topped up with direction edits.
pub fn mixed_plan(
    variant: &DatasetVariantSpec,
    method: Method,
    alphas: &[f64],
    threshold: Option<f64>,
    labeling: Labeling,
    multiplier: usize,
    rng_seed: u64,
) -> Result<AugmentationPlan> {
    build(Protocol::Mixed, variant, Some(method), alphas, threshold, labeling, multiplier, 1, rng_seed)
}

/// Geometric transforms only. Each pass adds 4 images per original, so the
/// multiplier must be `1 + 4p`.
pub fn baseline_plan(variant: &DatasetVariantSpec, multiplier: usize, rng_seed: u64) -> Result<AugmentationPlan> {
    if multiplier == 0 || (multiplier - 1) % GEOMETRIC_EXTRAS_PER_PASS != 0 {
        return Err(Error::InvalidArgument(format!(
            "geometric baseline multiplier must be 1 + {GEOMETRIC_EXTRAS_PER_PASS}·p, got {multiplier}"
        )));
    }
    let passes = (multiplier - 1) / GEOMETRIC_EXTRAS_PER_PASS;
    build(
        Protocol::GeometricBaseline,
        variant,
        None,
        &[],
        None,
        Labeling::FilterLabel,
        multiplier,
        passes,
        rng_seed,
    )
}

#[allow(clippy::too_many_arguments)]
fn build(
    protocol: Protocol,
    variant: &DatasetVariantSpec,
    method: Option<Method>,
    alphas: &[f64],
    threshold: Option<f64>,
    labeling: Labeling,
    multiplier: usize,
    geometric_passes: usize,
    rng_seed: u64,
) -> Result<AugmentationPlan> {
    let mut plan = AugmentationPlan {
        protocol,
        method,
        direction_index: 0,
        alphas: alphas.to_vec(),
        filter_threshold: threshold,
        labeling,
        variant: variant.clone(),
        imbalanced_classes: (0..variant.n_imbalanced_classes as ClassId).collect(),
        seeds_per_class: 0,
        target_multiplier: multiplier,
        geometric_passes,
        max_rounds: DEFAULT_MAX_ROUNDS,
        rng_seed,
    };
    plan.validate_shape()?;
    // Enough seeds that a perfect classifier meets the target in one round.
    let extras = plan.targets().direction_extras;
    plan.seeds_per_class = if alphas.is_empty() { 0 } else { extras.div_ceil(alphas.len()).max(1) };
    plan.validate()?;
    Ok(plan)
}

impl AugmentationPlan {
    pub fn with_imbalanced_classes(mut self, classes: Vec<ClassId>) -> Result<Self> {
        self.imbalanced_classes = classes;
        self.validate()?;
        Ok(self)
    }

    pub fn with_direction_index(mut self, index: usize) -> Self {
        self.direction_index = index;
        self
    }

    pub fn with_max_rounds(mut self, max_rounds: usize) -> Result<Self> {
        self.max_rounds = max_rounds;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seeds_per_class(mut self, seeds: usize) -> Result<Self> {
        self.seeds_per_class = seeds;
        self.validate()?;
        Ok(self)
    }

    fn validate_shape(&self) -> Result<()> {
        self.variant.validate()?;
        if let Some(t) = self.filter_threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidThreshold(t));
            }
        }
        if self.target_multiplier == 0 {
            return Err(Error::InvalidArgument("multiplier must be positive".into()));
        }
        let geo = 1 + GEOMETRIC_EXTRAS_PER_PASS * self.geometric_passes;
        match self.protocol {
            Protocol::GeometricBaseline => {
                if !self.alphas.is_empty() || self.method.is_some() {
                    return Err(Error::InvalidArgument(
                        "geometric baseline takes no method or alphas".into(),
                    ));
                }
                if geo != self.target_multiplier {
                    return Err(Error::InvalidArgument(format!(
                        "{} geometric passes give ×{geo}, not ×{}",
                        self.geometric_passes, self.target_multiplier
                    )));
                }
            }
            Protocol::DirectionBased | Protocol::Mixed => {
                if self.alphas.is_empty() {
                    return Err(Error::InvalidArgument("direction edits need at least one alpha".into()));
                }
                if self.alphas.iter().any(|a| !a.is_finite()) {
                    return Err(Error::NonFinite("alphas"));
                }
                if self.method.is_none() {
                    return Err(Error::InvalidArgument("direction edits need a method".into()));
                }
                if self.target_multiplier <= geo {
                    return Err(Error::InvalidArgument(format!(
                        "multiplier ×{} leaves no room for direction edits after ×{geo} geometric",
                        self.target_multiplier
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_shape()?;
        let mut sorted = self.imbalanced_classes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.imbalanced_classes.len()
            || sorted.len() != self.variant.n_imbalanced_classes
        {
            return Err(Error::InvalidArgument(format!(
                "expected {} distinct imbalanced classes, got {:?}",
                self.variant.n_imbalanced_classes, self.imbalanced_classes
            )));
        }
        if self.protocol != Protocol::GeometricBaseline && (self.seeds_per_class == 0 || self.max_rounds == 0) {
            return Err(Error::InvalidArgument("seeds_per_class and max_rounds must be positive".into()));
        }
        Ok(())
    }

    pub fn targets(&self) -> PlanTargets {
        let original = self.variant.train_per_imbalanced;
        let final_size = original * self.target_multiplier;
        let geometric_extras = original * GEOMETRIC_EXTRAS_PER_PASS * self.geometric_passes;
        PlanTargets {
            original,
            geometric_extras,
            direction_extras: final_size - original - geometric_extras,
            final_size,
        }
    }

    /// Samples (seed outputs not included) per acceptance round.
    pub fn round_size(&self) -> usize {
        self.seeds_per_class * self.imbalanced_classes.len()
    }

    /// SHA-256 of the plan's JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("plan serializes").as_bytes())
    }
}
