//! Augmentation planning and execution.
//!
//! Three protocols are supported:
//!
//! * **Geometric baseline**: three distinct rotations plus a horizontal flip
//!   per training image, i.e. four extra images per original.
//! * **Direction-based**: synthetic seeds are edited along one discovered
//!   direction with a set of magnitudes, classified, and accepted into
//!   still-deficient imbalanced classes.
//! * **Mixed**: one geometric pass plus direction-based samples for the rest
//!   of the target.
//!
//! Everything is driven by seeded streams; the same plan, directions and
//! deterministic oracles always reproduce the same [`RunReport`].

mod dataset;
mod geometric;
mod oracle;
mod plan;
mod run;

pub use dataset::{imbalance_dataset, ClassSplit, DatasetVariantSpec, SplitManifest};
pub use geometric::{geometric_plan, GeometricOp, RotationAngle, ROTATION_ANGLES};
pub use oracle::{
    serve_oracle, ClassId, ClassifierOracle, NearestCentroidClassifier, OracleRequest,
    OracleResponse, Prediction, SampleRef, SubprocessOracle,
};
pub use plan::{
    baseline_plan, direction_plan, mixed_plan, AugmentationPlan, Labeling, PlanTargets, Protocol,
    DEFAULT_MAX_ROUNDS, GEOMETRIC_EXTRAS_PER_PASS,
};
pub use run::{
    execute_plan, execute_plan_with_transform, seed_latent, AcceptedSample, ClassCounts, GeometricSink,
    NoTransform, Provenance, RunReport, RunStatus,
};
