//! Plan execution.
//!
//! A run is one logical stream. Seed `s` (global, counted across rounds) gets
//! its latent from stream `s` of a ChaCha8 generator keyed by the plan's
//! `rng_seed`, so the sequence of candidate samples never depends on what was
//! accepted earlier. Each round draws `seeds_per_class × n_imbalanced` seeds.
//! Accepted samples are routed by predicted label; a sample is kept iff its
//! probability clears the threshold and its class still needs samples. The
//! run stops as soon as every imbalanced class is full.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::geometric::{geometric_plan, GeometricOp};
use super::oracle::{ClassId, ClassifierOracle, Prediction, SampleRef};
use super::plan::{AugmentationPlan, Labeling, Protocol};
use crate::directions::DirectionSet;
use crate::editor::{apply_edit, EditSpec, Generator, LatentCode};
use crate::error::{Error, Result};

const GEOMETRIC_SALT: u64 = 0x6765_6f6d_6574_7279;

/// Latent code for seed `seed_index` of a run keyed by `rng_seed`.
pub fn seed_latent(rng_seed: u64, seed_index: u64, dim: usize) -> LatentCode {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(seed_index);
    LatentCode::sample(&mut rng, dim)
}

/// Receives geometric ops for the caller to apply to real images.
pub trait GeometricSink {
    fn apply(&mut self, class: ClassId, image_index: usize, ops: &[GeometricOp; 4]) -> Result<()>;
}

/// Records nothing; geometric extras are only counted.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoTransform;

impl GeometricSink for NoTransform {
    fn apply(&mut self, _: ClassId, _: usize, _: &[GeometricOp; 4]) -> Result<()> {
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub geometric: usize,
    pub generated: usize,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunStatus {
    TargetMet,
    /// `max_rounds` ran out; `shortfall` samples are still missing in total.
    TargetUnreachable { shortfall: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub plan_hash: String,
    pub rng_seed: u64,
    pub directions_sha256: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptedSample {
    pub id: u64,
    pub seed_index: u64,
    pub alpha: f64,
    pub label: ClassId,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub status: RunStatus,
    pub rounds_used: usize,
    pub oracle_calls: u64,
    /// Keyed by predicted label, so classes outside the imbalanced set can
    /// show up with rejections only.
    pub counts: BTreeMap<ClassId, ClassCounts>,
    /// `None` when nothing was generated.
    pub acceptance_rate: Option<f64>,
    pub original_train_size: usize,
    pub target_train_size: usize,
    /// Per imbalanced class: original + geometric + accepted.
    pub final_train_sizes: BTreeMap<ClassId, usize>,
    pub accepted: Vec<AcceptedSample>,
    pub provenance: Provenance,
}

impl RunReport {
    pub fn total(&self) -> ClassCounts {
        self.counts.values().fold(ClassCounts::default(), |acc, c| ClassCounts {
            geometric: acc.geometric + c.geometric,
            generated: acc.generated + c.generated,
            accepted: acc.accepted + c.accepted,
            rejected: acc.rejected + c.rejected,
        })
    }
}

pub fn execute_plan(
    plan: &AugmentationPlan,
    dirs: Option<&DirectionSet>,
    generator: &dyn Generator,
    classifier: &mut dyn ClassifierOracle,
) -> Result<RunReport> {
    execute_plan_with_transform(plan, dirs, generator, classifier, &mut NoTransform)
}

pub fn execute_plan_with_transform(
    plan: &AugmentationPlan,
    dirs: Option<&DirectionSet>,
    generator: &dyn Generator,
    classifier: &mut dyn ClassifierOracle,
    sink: &mut dyn GeometricSink,
) -> Result<RunReport> {
    plan.validate()?;
    let targets = plan.targets();
    let mut counts: BTreeMap<ClassId, ClassCounts> =
        plan.imbalanced_classes.iter().map(|&c| (c, ClassCounts::default())).collect();

    for pass in 0..plan.geometric_passes {
        for &class in &plan.imbalanced_classes {
            let seed = (plan.rng_seed ^ GEOMETRIC_SALT)
                .wrapping_add(((pass as u64) << 32) | u64::from(class));
            for (image, ops) in geometric_plan(targets.original, seed) {
                sink.apply(class, image, &ops)?;
                counts.get_mut(&class).expect("imbalanced class").geometric += ops.len();
            }
        }
    }

    let mut deficit: BTreeMap<ClassId, usize> = plan
        .imbalanced_classes
        .iter()
        .map(|&c| (c, targets.direction_extras))
        .collect();
    let mut rounds_used = 0;
    let mut oracle_calls = 0u64;
    let mut accepted = Vec::new();

    if plan.protocol != Protocol::GeometricBaseline {
        let dirs = check_directions(plan, dirs, generator)?;
        let threshold = plan.filter_threshold.unwrap_or(0.0);
        let stride = plan.alphas.len() as u64 + 1;
        let round_size = plan.round_size() as u64;
        let mut done = deficit.values().all(|&d| d == 0);
        let mut classify = |sample: &SampleRef<'_>| -> Result<Prediction> {
            oracle_calls += 1;
            classifier.classify(sample)?.checked()
        };

        'rounds: for round in 0..plan.max_rounds as u64 {
            if done {
                break;
            }
            rounds_used += 1;
            for slot in 0..round_size {
                let seed_index = round * round_size + slot;
                let z = seed_latent(plan.rng_seed, seed_index, dirs.latent_dim());
                let seed_pred = match plan.labeling {
                    Labeling::SeedLabel => {
                        let y = generator.generate(&z)?;
                        Some(classify(&SampleRef {
                            id: seed_index * stride,
                            seed_index,
                            edit: None,
                            latent: Some(&z),
                            output: &y,
                        })?)
                    }
                    Labeling::FilterLabel => None,
                };
                for (j, &alpha) in plan.alphas.iter().enumerate() {
                    if done {
                        break 'rounds;
                    }
                    let edited = apply_edit(
                        &z,
                        dirs,
                        EditSpec {
                            direction_index: plan.direction_index,
                            alpha,
                        },
                    )?;
                    let y = generator.generate(&edited)?;
                    let id = seed_index * stride + 1 + j as u64;
                    let pred = match seed_pred {
                        Some(p) => p,
                        None => classify(&SampleRef {
                            id,
                            seed_index,
                            edit: Some(j),
                            latent: Some(&edited),
                            output: &y,
                        })?,
                    };
                    let entry = counts.entry(pred.label).or_default();
                    entry.generated += 1;
                    let need = deficit.get_mut(&pred.label).filter(|d| **d > 0);
                    match need {
                        Some(d) if pred.probability >= threshold => {
                            *d -= 1;
                            entry.accepted += 1;
                            accepted.push(AcceptedSample {
                                id,
                                seed_index,
                                alpha,
                                label: pred.label,
                                probability: pred.probability,
                            });
                            done = deficit.values().all(|&d| d == 0);
                        }
                        _ => entry.rejected += 1,
                    }
                }
            }
        }
    }

    let shortfall: usize = deficit.values().sum();
    let status = if shortfall == 0 {
        RunStatus::TargetMet
    } else {
        log::warn!("target unreachable after {rounds_used} rounds, {shortfall} samples short");
        RunStatus::TargetUnreachable { shortfall }
    };
    let final_train_sizes = plan
        .imbalanced_classes
        .iter()
        .map(|c| {
            let k = &counts[c];
            (*c, targets.original + k.geometric + k.accepted)
        })
        .collect();
    let generated: usize = counts.values().map(|c| c.generated).sum();
    let acceptance_rate = (generated > 0).then(|| accepted.len() as f64 / generated as f64);
    Ok(RunReport {
        status,
        rounds_used,
        oracle_calls,
        counts,
        acceptance_rate,
        original_train_size: targets.original,
        target_train_size: targets.final_size,
        final_train_sizes,
        accepted,
        provenance: Provenance {
            plan_hash: plan.hash(),
            rng_seed: plan.rng_seed,
            directions_sha256: dirs.map(DirectionSet::fingerprint),
        },
    })
}

fn check_directions<'a>(
    plan: &AugmentationPlan,
    dirs: Option<&'a DirectionSet>,
    generator: &dyn Generator,
) -> Result<&'a DirectionSet> {
    let dirs = dirs.ok_or_else(|| Error::InvalidArgument("direction edits need a direction set".into()))?;
    if let Some(m) = plan.method {
        if m != dirs.method() {
            return Err(Error::MethodMismatch {
                expected: m.to_string(),
                found: dirs.method().to_string(),
            });
        }
    }
    if plan.direction_index >= dirs.count() {
        return Err(Error::IndexOutOfRange {
            index: plan.direction_index,
            count: dirs.count(),
        });
    }
    if generator.latent_dim() != dirs.latent_dim() {
        return Err(Error::DimensionMismatch(format!(
            "generator latent dim {} vs directions {}",
            generator.latent_dim(),
            dirs.latent_dim()
        )));
    }
    Ok(dirs)
}
