//! Dataset ingestion, augmentation, splitting, and the synthetic generator.

mod augment;
mod manifest;
mod pnm;
mod split;
mod synth;

pub use augment::{augment, AugmentSpec};
pub use manifest::{load_manifest, Manifest, SampleRecord};
pub use pnm::{decode_image, decode_image_bytes, encode_pgm, encode_ppm};
pub use split::{split, split_examples};
pub use synth::{synth_generate, SynthConfig};

use serde::{Deserialize, Serialize};

use crate::engine::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Number of age classes (young, adult, old).
pub const AGE_CLASSES: usize = 3;
/// Number of race classes (Asian, Latin-American, African, White).
pub const RACE_CLASSES: usize = 4;
/// Number of gender classes (male, female).
pub const GENDER_CLASSES: usize = 2;
/// Attribute subgroups: gender × age × race.
pub const SUBGROUPS: usize = GENDER_CLASSES * AGE_CLASSES * RACE_CLASSES;

/// The four classification tasks sharing one image set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Id,
    Age,
    Race,
    Gender,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Id, Task::Age, Task::Race, Task::Gender];

    pub fn name(self) -> &'static str {
        match self {
            Task::Id => "id",
            Task::Age => "age",
            Task::Race => "race",
            Task::Gender => "gender",
        }
    }

    pub fn parse(s: &str) -> Result<Task> {
        match s {
            "id" => Ok(Task::Id),
            "age" => Ok(Task::Age),
            "race" => Ok(Task::Race),
            "gender" => Ok(Task::Gender),
            other => Err(Error::config(format!(
                "unknown task '{other}' (expected id, age, race, or gender)"
            ))),
        }
    }

    /// Class count for the attribute tasks; identity depends on the dataset.
    pub fn fixed_class_count(self) -> Option<usize> {
        match self {
            Task::Id => None,
            Task::Age => Some(AGE_CLASSES),
            Task::Race => Some(RACE_CLASSES),
            Task::Gender => Some(GENDER_CLASSES),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The four categorical labels carried by every sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub id: usize,
    pub age: usize,
    pub race: usize,
    pub gender: usize,
}

impl Labels {
    pub fn new(id: usize, age: usize, race: usize, gender: usize) -> Result<Labels> {
        let l = Labels { id, age, race, gender };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if self.age >= AGE_CLASSES {
            return Err(Error::Label { label: self.age, classes: AGE_CLASSES });
        }
        if self.race >= RACE_CLASSES {
            return Err(Error::Label { label: self.race, classes: RACE_CLASSES });
        }
        if self.gender >= GENDER_CLASSES {
            return Err(Error::Label { label: self.gender, classes: GENDER_CLASSES });
        }
        Ok(())
    }

    /// Selects the label for one task.
    pub fn get(&self, task: Task) -> usize {
        match task {
            Task::Id => self.id,
            Task::Age => self.age,
            Task::Race => self.race,
            Task::Gender => self.gender,
        }
    }
}

/// One decoded (possibly augmented) training example.
#[derive(Debug, Clone)]
pub struct Example<T> {
    /// Stable reference: the source path, plus an `#augN` suffix for variants.
    pub reference: String,
    /// Identifier shared by all augmented variants of one original image.
    pub source_key: String,
    /// Image tensor; `[C,H,W]` in `[0,1]` until [`normalize`] is applied.
    pub image: Tensor<T>,
    pub labels: Labels,
}

/// Options for turning a manifest into train/test example sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataOptions {
    /// Fraction of split units that go to the train partition.
    pub train_fraction: f64,
    /// Split at source-key granularity (default). `false` reproduces the
    /// augment-then-split protocol where variants may straddle partitions.
    pub grouped: bool,
    pub split_seed: u64,
}

impl Default for DataOptions {
    fn default() -> Self {
        DataOptions {
            train_fraction: 0.7,
            grouped: true,
            split_seed: 0,
        }
    }
}

/// Decodes, augments, normalizes, and splits a manifest into train/test
/// example sets. Decoding and augmentation run in parallel per sample;
/// per-sample seeding keeps the result independent of worker count.
pub fn prepare_dataset<T: Scalar>(
    manifest: &Manifest,
    augment_spec: &AugmentSpec,
    options: &DataOptions,
) -> Result<(Vec<Example<T>>, Vec<Example<T>>)> {
    use rayon::prelude::*;

    let decoded: Result<Vec<Example<T>>> = manifest
        .records
        .par_iter()
        .map(|rec| {
            let image = decode_image::<T>(&rec.resolve(&manifest.base_dir))?;
            Ok(Example {
                reference: rec.path.clone(),
                source_key: rec.source_key.clone(),
                image,
                labels: rec.labels,
            })
        })
        .collect();
    let decoded = decoded?;

    if let Some(first) = decoded.first() {
        let shape = first.image.shape();
        if let Some(odd) = decoded.iter().find(|ex| ex.image.shape() != shape) {
            return Err(Error::config(format!(
                "mixed image shapes: '{}' is {:?}, '{}' is {:?}",
                first.reference,
                shape,
                odd.reference,
                odd.image.shape()
            )));
        }
    }

    let augmented: Result<Vec<Vec<Example<T>>>> =
        decoded.par_iter().map(|ex| augment(ex, augment_spec)).collect();
    let mut all = Vec::with_capacity(decoded.len() * augment_spec.factor);
    for group in augmented? {
        for mut ex in group {
            normalize(&mut ex.image);
            all.push(ex);
        }
    }
    split(all, options.train_fraction, options.split_seed, options.grouped)
}

/// Per-image mean subtraction followed by division by 0.5.
pub fn normalize<T: Scalar>(image: &mut Tensor<T>) {
    let n = T::from_f64(image.len() as f64);
    let mut sum = T::zero();
    for v in image.data() {
        sum = sum + *v;
    }
    let mean = sum / n;
    let half = T::from_f64(0.5);
    for v in image.data_mut() {
        *v = (*v - mean) / half;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_ranges_are_enforced() {
        assert!(Labels::new(0, 2, 3, 1).is_ok());
        assert!(Labels::new(0, 3, 0, 0).is_err());
        assert!(Labels::new(0, 0, 4, 0).is_err());
        assert!(Labels::new(0, 0, 0, 2).is_err());
    }

    #[test]
    fn task_selector_picks_the_right_field() {
        let l = Labels::new(5, 1, 2, 0).unwrap();
        assert_eq!(l.get(Task::Id), 5);
        assert_eq!(l.get(Task::Age), 1);
        assert_eq!(l.get(Task::Race), 2);
        assert_eq!(l.get(Task::Gender), 0);
    }

    #[test]
    fn normalize_centers_and_scales() {
        let mut img = Tensor::from_vec(&[1, 1, 2], vec![0.0f64, 1.0]).unwrap();
        normalize(&mut img);
        assert_eq!(img.data(), &[-1.0, 1.0]);
    }
}
