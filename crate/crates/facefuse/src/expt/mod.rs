//! The experiments: feature extraction, the 4x4 cross-task accuracy matrix,
//! and the own / other-three / all fusion study.
//!
//! Every head run is named `source[+source...]->target`; its seed derives
//! from `hash(study seed, name)`, so runs are order-independent and the
//! fusion study's own-configuration cell for a task is identical to the
//! cross-task matrix's diagonal cell under the same study seed.

mod features;
mod report;

pub use features::{read_features, write_features};
pub use report::{emit_cross_report, emit_fusion_report, render_cross_csv, render_cross_text,
    render_fusion_csv, render_fusion_text};

use serde::{Deserialize, Serialize};

use crate::data::{Example, Labels, Task};
use crate::engine::{Scalar, Tensor};
use crate::error::{Error, Result};
use crate::model::{build_fusion_head, Network};
use crate::rng;
use crate::train::{evaluate, train_head, MetricsRow, TrainConfig};

/// Which side of the train/test split a feature set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Test,
}

impl SplitTag {
    pub fn name(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<SplitTag> {
        match s {
            "train" => Ok(SplitTag::Train),
            "test" => Ok(SplitTag::Test),
            other => Err(Error::config(format!("unknown split tag '{other}'"))),
        }
    }
}

/// One sample's feature vector plus all four labels, so a single extraction
/// serves every target task.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow<T> {
    pub reference: String,
    pub labels: Labels,
    pub vector: Vec<T>,
}

/// Per-sample high-level features tagged with the producing task(s).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet<T> {
    /// Producing task, or a `+`-joined list for concatenations.
    pub tag: String,
    pub dim: usize,
    pub split: SplitTag,
    pub rows: Vec<FeatureRow<T>>,
}

/// Runs every sample through the backbone and collects the feature-tap
/// activation. Row order follows sample order; the result is deterministic.
pub fn extract_features<T: Scalar>(
    backbone: &Network<T>,
    samples: &[Example<T>],
    tag: &str,
    split: SplitTag,
) -> Result<FeatureSet<T>> {
    use rayon::prelude::*;
    let rows: Result<Vec<FeatureRow<T>>> = samples
        .par_iter()
        .map(|ex| {
            let (_, feature) = crate::model::forward_full(backbone, &ex.image)?;
            Ok(FeatureRow {
                reference: ex.reference.clone(),
                labels: ex.labels,
                vector: feature.into_data(),
            })
        })
        .collect();
    Ok(FeatureSet {
        tag: tag.to_string(),
        dim: backbone.feature_dim(),
        split,
        rows: rows?,
    })
}

/// Concatenates aligned feature sets in the given order. All sets must cover
/// the same samples in the same order; a single set passes through unchanged
/// apart from cloning.
pub fn concat_features<T: Scalar>(sets: &[&FeatureSet<T>]) -> Result<FeatureSet<T>> {
    let first = sets.first().ok_or_else(|| Error::config("concat: no feature sets"))?;
    for s in sets {
        if s.split != first.split {
            return Err(Error::config(format!(
                "concat: split mismatch ({} vs {})",
                s.split.name(),
                first.split.name()
            )));
        }
    }
    // Alignment check: identical reference sequences.
    for s in &sets[1..] {
        if s.rows.len() != first.rows.len()
            || s.rows.iter().zip(&first.rows).any(|(a, b)| a.reference != b.reference)
        {
            let have: std::collections::HashSet<&str> =
                s.rows.iter().map(|r| r.reference.as_str()).collect();
            let mut missing: Vec<String> = first
                .rows
                .iter()
                .filter(|r| !have.contains(r.reference.as_str()))
                .map(|r| r.reference.clone())
                .take(8)
                .collect();
            if missing.is_empty() {
                missing.push("(row order differs)".to_string());
            }
            return Err(Error::Alignment { missing });
        }
    }

    let dim = sets.iter().map(|s| s.dim).sum();
    let rows = first
        .rows
        .iter()
        .enumerate()
        .map(|(i, base)| {
            let mut vector = Vec::with_capacity(dim);
            for s in sets {
                vector.extend_from_slice(&s.rows[i].vector);
            }
            FeatureRow {
                reference: base.reference.clone(),
                labels: base.labels,
                vector,
            }
        })
        .collect();
    Ok(FeatureSet {
        tag: sets.iter().map(|s| s.tag.as_str()).collect::<Vec<_>>().join("+"),
        dim,
        split: first.split,
        rows,
    })
}

/// Feature rows as training examples for a head.
pub fn features_to_examples<T: Scalar>(set: &FeatureSet<T>) -> Vec<Example<T>> {
    set.rows
        .iter()
        .map(|r| Example {
            reference: r.reference.clone(),
            source_key: r.reference.clone(),
            image: Tensor::from_vec(&[set.dim], r.vector.clone()).expect("row length equals dim"),
            labels: r.labels,
        })
        .collect()
}

/// Default training budget for heads.
pub fn default_head_config() -> TrainConfig {
    TrainConfig {
        iterations: 5000,
        ..TrainConfig::default()
    }
}

/// Accuracy trace of one trained head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRun {
    pub name: String,
    pub accuracy: f64,
    pub metrics: Vec<MetricsRow>,
}

/// 4x4 accuracies: rows are the feature source task, columns the target.
/// Both axes follow [`Task::ALL`] order (id, age, race, gender).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossTaskMatrix {
    pub accuracies: [[f64; 4]; 4],
}

/// Full cross-task study: the matrix plus table labels and training curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossTaskStudy {
    pub matrix: CrossTaskMatrix,
    /// Feature width per source task.
    pub feature_dims: [usize; 4],
    /// Class count per target task.
    pub class_counts: [usize; 4],
    pub cells: Vec<CellRun>,
}

/// Accuracies of the own / other-three / all configurations per target task
/// (in [`Task::ALL`] order), with the all-minus-own margins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionReport {
    pub own: [f64; 4],
    pub other_three: [f64; 4],
    pub all: [f64; 4],
}

impl FusionReport {
    /// `all − own`, exactly.
    pub fn margins(&self) -> [f64; 4] {
        let mut m = [0.0; 4];
        for i in 0..4 {
            m[i] = self.all[i] - self.own[i];
        }
        m
    }
}

/// Full fusion study: the report plus labels and training curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionStudy {
    pub report: FusionReport,
    pub class_counts: [usize; 4],
    pub cells: Vec<CellRun>,
}


fn cell_name(sources: &[Task], target: Task) -> String {
    let srcs: Vec<&str> = sources.iter().map(|t| t.name()).collect();
    format!("{}->{}", srcs.join("+"), target.name())
}

/// Trains one head over the given (possibly concatenated) features and
/// evaluates it on the test rows. Seeds derive from the study seed and the
/// cell name only.
fn run_cell<T: Scalar>(
    train_feats: &FeatureSet<T>,
    test_feats: &FeatureSet<T>,
    sources: &[Task],
    target: Task,
    class_count: usize,
    dims: &[usize],
    config: &TrainConfig,
) -> Result<CellRun> {
    let name = cell_name(sources, target);
    let cell_seed = rng::mix_str(config.seed, &name);
    let mut head = build_fusion_head::<T>(dims, class_count, cell_seed)?;
    let train_examples = features_to_examples(train_feats);
    let test_examples = features_to_examples(test_feats);
    let cell_config = TrainConfig { seed: cell_seed, ..config.clone() };
    let run = train_head(&mut head, &train_examples, &test_examples, target, &cell_config)
        .map_err(|e| Error::config(format!("cell {name}: {e}")))?;
    let accuracy = evaluate(&head, &test_examples, target)?;
    Ok(CellRun {
        name,
        accuracy,
        metrics: run.metrics,
    })
}

/// Extracts one feature set per backbone for both splits.
///
/// `backbones` is ordered like [`Task::ALL`]. Returns `(train, test)` feature
/// sets in the same order.
pub fn extract_all_features<T: Scalar>(
    backbones: &[Network<T>; 4],
    train: &[Example<T>],
    test: &[Example<T>],
) -> Result<([FeatureSet<T>; 4], [FeatureSet<T>; 4])> {
    let mut train_sets = Vec::with_capacity(4);
    let mut test_sets = Vec::with_capacity(4);
    for (task, net) in Task::ALL.iter().zip(backbones) {
        train_sets.push(extract_features(net, train, task.name(), SplitTag::Train)?);
        test_sets.push(extract_features(net, test, task.name(), SplitTag::Test)?);
    }
    Ok((
        train_sets.try_into().map_err(|_| Error::config("expected 4 sets")).unwrap(),
        test_sets.try_into().map_err(|_| Error::config("expected 4 sets")).unwrap(),
    ))
}

/// The cross-task-feature recognition experiment: for every (source, target)
/// pair, train a head for the target task on the source backbone's features
/// and evaluate on the test split. Backbones are never modified.
pub fn run_cross_task_matrix<T: Scalar>(
    backbones: &[Network<T>; 4],
    train: &[Example<T>],
    test: &[Example<T>],
    config: &TrainConfig,
) -> Result<CrossTaskStudy> {
    let (train_sets, test_sets) = extract_all_features(backbones, train, test)?;
    let class_counts = backbones_class_counts(backbones);
    let feature_dims: [usize; 4] = std::array::from_fn(|i| backbones[i].feature_dim());

    let mut matrix = [[0.0; 4]; 4];
    let mut cells = Vec::with_capacity(16);
    for (si, source) in Task::ALL.iter().enumerate() {
        for (ti, target) in Task::ALL.iter().enumerate() {
            let cell = run_cell(
                &train_sets[si],
                &test_sets[si],
                &[*source],
                *target,
                class_counts[ti],
                &[feature_dims[si]],
                config,
            )?;
            matrix[si][ti] = cell.accuracy;
            cells.push(cell);
        }
    }
    Ok(CrossTaskStudy {
        matrix: CrossTaskMatrix { accuracies: matrix },
        feature_dims,
        class_counts,
        cells,
    })
}

/// The fusion experiment: for every target task, train heads on the task's
/// own features, on the other three tasks' concatenated features, and on all
/// four, then report accuracies and the all-minus-own margins.
pub fn run_fusion_study<T: Scalar>(
    backbones: &[Network<T>; 4],
    train: &[Example<T>],
    test: &[Example<T>],
    config: &TrainConfig,
) -> Result<FusionStudy> {
    let (train_sets, test_sets) = extract_all_features(backbones, train, test)?;
    let class_counts = backbones_class_counts(backbones);

    let mut own = [0.0; 4];
    let mut other_three = [0.0; 4];
    let mut all = [0.0; 4];
    let mut cells = Vec::with_capacity(12);
    for (ti, target) in Task::ALL.iter().enumerate() {
        let configs: [(&str, Vec<usize>); 3] = [
            ("own", vec![ti]),
            ("other", (0..4).filter(|i| *i != ti).collect()),
            ("all", (0..4).collect()),
        ];
        for (kind, indices) in configs {
            let sources: Vec<Task> = indices.iter().map(|&i| Task::ALL[i]).collect();
            let train_refs: Vec<&FeatureSet<T>> = indices.iter().map(|&i| &train_sets[i]).collect();
            let test_refs: Vec<&FeatureSet<T>> = indices.iter().map(|&i| &test_sets[i]).collect();
            let train_cat = concat_features(&train_refs)?;
            let test_cat = concat_features(&test_refs)?;
            let dims: Vec<usize> = indices.iter().map(|&i| train_sets[i].dim).collect();
            let cell = run_cell(
                &train_cat,
                &test_cat,
                &sources,
                *target,
                class_counts[ti],
                &dims,
                config,
            )?;
            match kind {
                "own" => own[ti] = cell.accuracy,
                "other" => other_three[ti] = cell.accuracy,
                _ => all[ti] = cell.accuracy,
            }
            cells.push(cell);
        }
    }
    Ok(FusionStudy {
        report: FusionReport { own, other_three, all },
        class_counts,
        cells,
    })
}

fn backbones_class_counts<T: Scalar>(backbones: &[Network<T>; 4]) -> [usize; 4] {
    std::array::from_fn(|i| backbones[i].class_count())
}

/// Majority-class accuracy for one task over an example set: the floor
/// against which transfer is judged.
pub fn majority_baseline<T: Scalar>(examples: &[Example<T>], task: Task) -> f64 {
    let mut histogram = std::collections::BTreeMap::new();
    for ex in examples {
        *histogram.entry(ex.labels.get(task)).or_insert(0usize) += 1;
    }
    let best = histogram.values().max().copied().unwrap_or(0);
    best as f64 / examples.len().max(1) as f64
}
