//! Experiment configuration files.
//!
//! A config is a flat TOML document. Semantic errors are reported with the
//! line of the offending key, e.g. `exp.cfg:4: threshold: must be in [0, 1], got 1.3`.

use std::path::{Path, PathBuf};

use latdir::augment::{
    baseline_plan, direction_plan, mixed_plan, AugmentationPlan, ClassId, DatasetVariantSpec, Labeling,
    NearestCentroidClassifier, Protocol,
};
use latdir::augment::seed_latent;
use latdir::directions::Method;
use latdir::editor::{Generator, ToyGenerator};
use ndarray::Array2;
use serde::Deserialize;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub method: Option<Method>,
    /// One of the standard variant names.
    pub variant: String,
    #[serde(default)]
    pub alphas: Vec<f64>,
    pub threshold: Option<f64>,
    #[serde(default = "default_labeling")]
    pub labeling: Labeling,
    pub multiplier: usize,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub direction_index: usize,
    pub max_rounds: Option<usize>,
    pub seeds_per_class: Option<usize>,
    pub imbalanced_classes: Option<Vec<ClassId>>,

    /// Direction manifest, relative to the config file. Without it,
    /// directions are discovered from the generator weights.
    pub directions: Option<PathBuf>,
    #[serde(default = "default_k")]
    pub k: usize,

    /// Weight matrix used as the linear generator, relative to the config
    /// file. Without it a seeded random toy generator is built.
    pub generator_weights: Option<PathBuf>,
    #[serde(default = "default_output_dim")]
    pub generator_output_dim: usize,
    #[serde(default = "default_latent_dim")]
    pub generator_latent_dim: usize,
    #[serde(default)]
    pub generator_seed: u64,

    #[serde(default)]
    pub oracle: OracleKind,
    #[serde(default)]
    pub oracle_command: Vec<String>,
    pub oracle_sigma: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// In-process nearest-centroid classifier over the imbalanced classes.
    #[default]
    Toy,
    /// External process speaking the line protocol.
    Subprocess,
}

fn default_labeling() -> Labeling {
    Labeling::FilterLabel
}
fn default_k() -> usize {
    10
}
fn default_output_dim() -> usize {
    64
}
fn default_latent_dim() -> usize {
    16
}

/// A config error tied to a file and, when known, a line.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub source: String,
    pub path: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let config: ExperimentConfig = toml::from_str(&source).map_err(|e| {
            let line = e
                .span()
                .map(|s| format!(":{}", source[..s.start].matches('\n').count() + 1))
                .unwrap_or_default();
            ConfigError(format!("{}{line}: {}", path.display(), e.message()))
        })?;
        Ok(LoadedConfig {
            config,
            source,
            path: path.to_path_buf(),
        })
    }

    /// `path:line: field: message`, with the line of `field` if present.
    pub fn field_error(&self, field: &str, msg: impl std::fmt::Display) -> ConfigError {
        let line = self
            .source
            .lines()
            .position(|l| {
                let l = l.trim_start();
                l.strip_prefix(field)
                    .is_some_and(|rest| rest.trim_start().starts_with('='))
            })
            .map(|i| format!(":{}", i + 1))
            .unwrap_or_default();
        ConfigError(format!("{}{line}: {field}: {msg}", self.path.display()))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match self.path.parent() {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn plan(&self) -> Result<AugmentationPlan, ConfigError> {
        let c = &self.config;
        let variant = DatasetVariantSpec::by_name(&c.variant).ok_or_else(|| {
            let names: Vec<String> = DatasetVariantSpec::standard_variants().into_iter().map(|v| v.name).collect();
            self.field_error("variant", format!("unknown variant {:?}, expected one of {names:?}", c.variant))
        })?;
        if let Some(t) = c.threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(self.field_error("threshold", format!("must be in [0, 1], got {t}")));
            }
        }
        if c.multiplier == 0 {
            return Err(self.field_error("multiplier", "must be positive"));
        }
        let plan = match c.protocol {
            Protocol::GeometricBaseline => {
                if c.method.is_some() || !c.alphas.is_empty() {
                    return Err(self.field_error("protocol", "geometric_baseline takes no method or alphas"));
                }
                baseline_plan(&variant, c.multiplier, c.rng_seed).map_err(|e| self.field_error("multiplier", e))?
            }
            Protocol::DirectionBased | Protocol::Mixed => {
                let method = c.method.ok_or_else(|| self.field_error("method", "required for direction edits"))?;
                if c.alphas.is_empty() {
                    return Err(self.field_error("alphas", "at least one magnitude is required"));
                }
                let build = if c.protocol == Protocol::Mixed { mixed_plan } else { direction_plan };
                build(&variant, method, &c.alphas, c.threshold, c.labeling, c.multiplier, c.rng_seed)
                    .map_err(|e| self.field_error("multiplier", e))?
                    .with_direction_index(c.direction_index)
            }
        };
        let mut plan = plan;
        if let Some(classes) = &c.imbalanced_classes {
            plan = plan
                .with_imbalanced_classes(classes.clone())
                .map_err(|e| self.field_error("imbalanced_classes", e))?;
        }
        if let Some(r) = c.max_rounds {
            plan = plan.with_max_rounds(r).map_err(|e| self.field_error("max_rounds", e))?;
        }
        if let Some(s) = c.seeds_per_class {
            plan = plan.with_seeds_per_class(s).map_err(|e| self.field_error("seeds_per_class", e))?;
        }
        if c.oracle == OracleKind::Subprocess && c.oracle_command.is_empty() {
            return Err(self.field_error("oracle_command", "required when oracle = \"subprocess\""));
        }
        Ok(plan)
    }

    pub fn generator(&self) -> Result<ToyGenerator, ConfigError> {
        let c = &self.config;
        match &c.generator_weights {
            Some(p) => {
                let path = self.resolve(p);
                let m = latdir::io::read_matrix(&path).map_err(|e| self.field_error("generator_weights", e))?;
                let rows = m.nrows();
                ToyGenerator::new(m, ndarray::Array1::zeros(rows)).map_err(|e| self.field_error("generator_weights", e))
            }
            None => ToyGenerator::random(c.generator_output_dim, c.generator_latent_dim, c.generator_seed)
                .map_err(|e| self.field_error("generator_output_dim", e)),
        }
    }

    /// Nearest-centroid classifier with one centroid per imbalanced class:
    /// the generator's output at a seeded latent of radius 1.5 per class.
    pub fn toy_classifier(
        &self,
        generator: &ToyGenerator,
        classes: &[ClassId],
    ) -> Result<NearestCentroidClassifier, ConfigError> {
        let dim = generator.latent_dim();
        let mut centroids = Array2::zeros((classes.len(), generator.output_dim()));
        for (row, &class) in classes.iter().enumerate() {
            let z = seed_latent(self.config.generator_seed ^ TOY_ORACLE_SALT, u64::from(class), dim);
            let norm = z.as_array().dot(z.as_array()).sqrt();
            let z = latdir::editor::LatentCode::new(z.as_array() * (1.5 / norm)).expect("finite");
            let y = generator.generate(&z).map_err(|e| self.field_error("generator_latent_dim", e))?;
            centroids.row_mut(row).assign(&y);
        }
        let sigma = match self.config.oracle_sigma {
            Some(s) => s,
            None => {
                // Half the smallest centroid separation.
                let mut best = f64::INFINITY;
                for i in 0..centroids.nrows() {
                    for j in i + 1..centroids.nrows() {
                        let d = &centroids.row(i) - &centroids.row(j);
                        best = best.min(d.dot(&d).sqrt());
                    }
                }
                if best.is_finite() { 0.5 * best } else { 1.0 }
            }
        };
        NearestCentroidClassifier::new(centroids, classes.to_vec(), sigma).map_err(|e| self.field_error("oracle_sigma", e))
    }
}

const TOY_ORACLE_SALT: u64 = 0x746f_795f_6f72_6163;
