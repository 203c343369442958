//! Two-class Gaussian augmentation fixture and a from-scratch re-simulation
//! of the seeded acceptance stream.

use std::collections::BTreeMap;

use latdir::augment::{
    direction_plan, AugmentationPlan, ClassId, DatasetVariantSpec, Labeling,
    NearestCentroidClassifier,
};
use latdir::directions::{lpp_directions, DirectionSet, Method, WeightMatrix};
use latdir::editor::ToyGenerator;
use latdir::spectral::Regularization;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const EXP1_ALPHAS: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];

pub struct TwoClass {
    pub generator: ToyGenerator,
    pub dirs: DirectionSet,
    pub centroids: Array2<f64>,
    pub sigma: f64,
    pub variant: DatasetVariantSpec,
}

/// Two classes centred at `±M·(1.5·u₀)` in output space, where `u₀` is the
/// first LPP direction of the generator's weights. Both are imbalanced.
pub fn two_class(seed: u64) -> TwoClass {
    let generator = ToyGenerator::random(32, 8, seed).unwrap();
    let dirs = lpp_directions(&WeightMatrix::new(generator.matrix().clone()).unwrap(), 5, 8, Regularization::Auto)
        .unwrap();
    let m = generator.matrix();
    let shift: Array1<f64> = m.dot(&dirs.direction(0)) * 1.5;
    let mut centroids = Array2::zeros((2, m.nrows()));
    centroids.row_mut(0).assign(&shift);
    centroids.row_mut(1).assign(&(-&shift));
    let sigma = shift.dot(&shift).sqrt();
    TwoClass {
        generator,
        dirs,
        centroids,
        sigma,
        variant: DatasetVariantSpec::new("gauss2", 2, 20, 100, 10, 10).unwrap(),
    }
}

impl TwoClass {
    pub fn classifier(&self) -> NearestCentroidClassifier {
        NearestCentroidClassifier::new(self.centroids.clone(), vec![0, 1], self.sigma).unwrap()
    }

    pub fn plan(&self, threshold: f64, rng_seed: u64) -> AugmentationPlan {
        direction_plan(&self.variant, Method::Lpp, &EXP1_ALPHAS, Some(threshold), Labeling::FilterLabel, 5, rng_seed)
            .unwrap()
    }
}

/// Accepted counts per class, recomputed without the library's run loop,
/// edit, generator or classifier code.
pub fn replay(fx: &TwoClass, plan: &AugmentationPlan) -> BTreeMap<ClassId, usize> {
    let m = fx.generator.matrix();
    let u: Vec<f64> = fx.dirs.direction(plan.direction_index).to_vec();
    let (dim, out) = (m.ncols(), m.nrows());
    let threshold = plan.filter_threshold.unwrap_or(0.0);
    let need = plan.variant.train_per_imbalanced * (plan.target_multiplier - 1);
    let mut remaining: BTreeMap<ClassId, usize> = plan.imbalanced_classes.iter().map(|&c| (c, need)).collect();
    let mut accepted: BTreeMap<ClassId, usize> = plan.imbalanced_classes.iter().map(|&c| (c, 0)).collect();
    let round = (plan.seeds_per_class * plan.imbalanced_classes.len()) as u64;
    let total_seeds = round * plan.max_rounds as u64;

    'seeds: for s in 0..total_seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(plan.rng_seed);
        rng.set_stream(s);
        let z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        for &alpha in &plan.alphas {
            if remaining.values().all(|&r| r == 0) {
                break 'seeds;
            }
            let zp: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a + alpha * b).collect();
            let y: Vec<f64> = (0..out).map(|i| (0..dim).map(|j| m[[i, j]] * zp[j]).sum()).collect();
            let d2: Vec<f64> = fx
                .centroids
                .rows()
                .into_iter()
                .map(|c| c.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum())
                .collect();
            let label = if d2[1] < d2[0] { 1 } else { 0 };
            let w: Vec<f64> = d2.iter().map(|d| (-d / (2.0 * fx.sigma * fx.sigma)).exp()).collect();
            let p = w[label] / (w[0] + w[1]);
            let label = label as ClassId;
            if p >= threshold {
                if let Some(r) = remaining.get_mut(&label).filter(|r| **r > 0) {
                    *r -= 1;
                    *accepted.get_mut(&label).unwrap() += 1;
                }
            }
        }
    }
    accepted
}
