use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::oracle::ClassId;
use crate::error::{Error, Result};

/// How a dataset is artificially imbalanced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetVariantSpec {
    pub name: String,
    pub n_imbalanced_classes: usize,
    pub train_per_imbalanced: usize,
    pub train_per_balanced: usize,
    pub val_per_class: usize,
    pub test_per_class: usize,
}

impl DatasetVariantSpec {
    pub fn new(
        name: impl Into<String>,
        n_imbalanced_classes: usize,
        train_per_imbalanced: usize,
        train_per_balanced: usize,
        val_per_class: usize,
        test_per_class: usize,
    ) -> Result<Self> {
        let spec = DatasetVariantSpec {
            name: name.into(),
            n_imbalanced_classes,
            train_per_imbalanced,
            train_per_balanced,
            val_per_class,
            test_per_class,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            self.n_imbalanced_classes,
            self.train_per_imbalanced,
            self.train_per_balanced,
            self.val_per_class,
            self.test_per_class,
        ];
        if counts.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "variant {:?}: all counts must be positive",
                self.name
            )));
        }
        if self.train_per_imbalanced >= self.train_per_balanced {
            return Err(Error::InvalidArgument(format!(
                "variant {:?}: imbalanced train size {} must be below balanced size {}",
                self.name, self.train_per_imbalanced, self.train_per_balanced
            )));
        }
        Ok(())
    }

    /// NWPU-RESISC45, 7 classes cut to 70 training images.
    pub fn resisc70() -> Self {
        Self::preset("Resisc70", 7, 70, 450, 150, 100)
    }

    pub fn resisc35() -> Self {
        Self::preset("Resisc35", 7, 35, 450, 150, 100)
    }

    pub fn resisc10() -> Self {
        Self::preset("Resisc10", 7, 10, 450, 150, 100)
    }

    /// UC Merced land use, 5 classes cut to 10 training images.
    pub fn ucmerced10() -> Self {
        Self::preset("UCMerced10", 5, 10, 75, 15, 10)
    }

    /// AID, 7 classes cut to 40 training images.
    pub fn aid40() -> Self {
        Self::preset("AID40", 7, 40, 120, 40, 40)
    }

    fn preset(name: &str, n: usize, imb: usize, bal: usize, val: usize, test: usize) -> Self {
        DatasetVariantSpec {
            name: name.into(),
            n_imbalanced_classes: n,
            train_per_imbalanced: imb,
            train_per_balanced: bal,
            val_per_class: val,
            test_per_class: test,
        }
    }

    /// The five standard variants.
    pub fn standard_variants() -> Vec<Self> {
        vec![
            Self::resisc70(),
            Self::resisc35(),
            Self::resisc10(),
            Self::ucmerced10(),
            Self::aid40(),
        ]
    }

    /// Looks up a standard variant by case-insensitive name.
    pub fn by_name(name: &str) -> Option<Self> {
        let key = name.to_ascii_lowercase().replace(['-', '_'], "");
        Self::standard_variants()
            .into_iter()
            .find(|v| v.name.to_ascii_lowercase() == key)
    }
}

/// Sample indices assigned to each split of one class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub variant: DatasetVariantSpec,
    pub rng_seed: u64,
    pub imbalanced_classes: Vec<ClassId>,
    pub classes: BTreeMap<ClassId, ClassSplit>,
}

/// Picks the imbalanced classes and assigns sample indices to
/// train/val/test, all from one seeded stream.
///
/// Every class must hold at least `train_per_balanced + val + test` samples,
/// since any class may be left balanced.
pub fn imbalance_dataset(
    class_sizes: &BTreeMap<ClassId, usize>,
    spec: &DatasetVariantSpec,
    rng_seed: u64,
) -> Result<SplitManifest> {
    spec.validate()?;
    if spec.n_imbalanced_classes > class_sizes.len() {
        return Err(Error::InfeasibleSpec(format!(
            "{} imbalanced classes requested but only {} classes exist",
            spec.n_imbalanced_classes,
            class_sizes.len()
        )));
    }
    let needed = spec.train_per_balanced + spec.val_per_class + spec.test_per_class;
    if let Some((id, size)) = class_sizes.iter().find(|(_, &s)| s < needed) {
        return Err(Error::InfeasibleSpec(format!(
            "class {id} has {size} samples, variant {:?} needs {needed}",
            spec.name
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let ids: Vec<ClassId> = class_sizes.keys().copied().collect();
    let mut imbalanced: Vec<ClassId> =
        rand::seq::index::sample(&mut rng, ids.len(), spec.n_imbalanced_classes)
            .into_iter()
            .map(|i| ids[i])
            .collect();
    imbalanced.sort_unstable();

    let mut classes = BTreeMap::new();
    for (&id, &size) in class_sizes {
        let mut perm: Vec<usize> = (0..size).collect();
        perm.shuffle(&mut rng);
        let n_train = if imbalanced.binary_search(&id).is_ok() {
            spec.train_per_imbalanced
        } else {
            spec.train_per_balanced
        };
        let (val, rest) = perm.split_at(spec.val_per_class);
        let (test, rest) = rest.split_at(spec.test_per_class);
        let sorted = |s: &[usize]| {
            let mut v = s.to_vec();
            v.sort_unstable();
            v
        };
        classes.insert(
            id,
            ClassSplit {
                train: sorted(&rest[..n_train]),
                val: sorted(val),
                test: sorted(test),
            },
        );
    }
    Ok(SplitManifest {
        variant: spec.clone(),
        rng_seed,
        imbalanced_classes: imbalanced,
        classes,
    })
}
