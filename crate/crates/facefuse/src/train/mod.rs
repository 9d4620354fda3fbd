//! Mini-batch SGD with step learning-rate decay, evaluation, metrics, and
//! checkpointing.
//!
//! Determinism: batches are drawn with replacement from a ChaCha stream
//! seeded by the config; per-sample gradients are computed over fixed-size
//! chunks that may run in parallel, then reduced in chunk order, so the
//! result never depends on the worker count.

mod checkpoint;
mod metrics;

pub use checkpoint::{
    checkpoint_precision, load_checkpoint, save_checkpoint, CheckpointMeta, CHECKPOINT_MAGIC,
};
pub use metrics::{metrics_to_csv, write_metrics_csv, MetricsRow};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Example, Task};
use crate::engine::{accumulate_grads, scale_grads, sgd_step, softmax_cross_entropy, Scalar};
use crate::error::{Error, Result};
use crate::model::{backward, forward, Network};
use crate::rng;

/// Samples per gradient chunk; chunks reduce in order so the chunking, not
/// the thread count, fixes the summation order.
const GRAD_CHUNK: usize = 4;
const EVAL_CHUNK: usize = 64;

/// Element type of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn name(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }

    pub fn parse(s: &str) -> Result<Precision> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(Error::config(format!("unknown precision '{other}'"))),
        }
    }
}

/// Training-loop settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Images per iteration, sampled with replacement.
    pub batch_size: usize,
    pub iterations: usize,
    pub lr_initial: f64,
    /// Multiplier applied every `lr_decay_interval` iterations.
    pub lr_decay_factor: f64,
    /// Defaults to a quarter of the iteration budget.
    pub lr_decay_interval: Option<usize>,
    /// Iterations between full test evaluations; defaults to iterations/100.
    pub eval_every: Option<usize>,
    pub seed: u64,
    pub precision: Precision,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 200,
            iterations: 20_000,
            lr_initial: 0.01,
            lr_decay_factor: 0.5,
            lr_decay_interval: None,
            eval_every: None,
            seed: 0,
            precision: Precision::F32,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        if self.iterations == 0 {
            return Err(Error::config("iterations must be >= 1"));
        }
        if !(self.lr_initial >= 0.0) {
            return Err(Error::config(format!("lr_initial must be >= 0, got {}", self.lr_initial)));
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor <= 1.0) {
            return Err(Error::config(format!(
                "lr_decay_factor must be in (0,1], got {}",
                self.lr_decay_factor
            )));
        }
        if self.lr_decay_interval == Some(0) || self.eval_every == Some(0) {
            return Err(Error::config("intervals must be positive"));
        }
        Ok(())
    }

    pub fn decay_interval(&self) -> usize {
        self.lr_decay_interval.unwrap_or((self.iterations / 4).max(1))
    }

    pub fn eval_interval(&self) -> usize {
        self.eval_every.unwrap_or((self.iterations / 100).max(1))
    }
}

/// Step-decay schedule: `lr_initial · factor^⌊iteration / interval⌋`.
pub fn lr_at(config: &TrainConfig, iteration: usize) -> f64 {
    let steps = (iteration / config.decay_interval()) as i32;
    config.lr_initial * config.lr_decay_factor.powi(steps)
}

/// Result of a training run: the metrics trace plus the RNG position, which
/// goes into the checkpoint.
pub struct TrainRun {
    pub metrics: Vec<MetricsRow>,
    pub rng_state: String,
}

fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

struct SampleResult<T: Scalar> {
    loss: f64,
    correct: usize,
    grads: Vec<crate::engine::GradientBundle<T>>,
}

fn sample_grad<T: Scalar>(net: &Network<T>, ex: &Example<T>, task: Task) -> Result<SampleResult<T>> {
    let trace = forward(net, &ex.image)?;
    let label = ex.labels.get(task);
    let (loss, _, logit_grad) = softmax_cross_entropy(trace.logits(), label)?;
    let correct = (argmax(trace.logits().data()) == label) as usize;
    let grads = backward(net, &trace, &logit_grad)?;
    Ok(SampleResult {
        loss: loss.as_f64(),
        correct,
        grads,
    })
}

fn warn_on_empty_classes<T: Scalar>(net: &Network<T>, train_set: &[Example<T>], task: Task) {
    let classes = net.class_count();
    let mut histogram = vec![0usize; classes];
    for ex in train_set {
        let l = ex.labels.get(task);
        if l < classes {
            histogram[l] += 1;
        }
    }
    for (class, count) in histogram.iter().enumerate() {
        if *count == 0 {
            log::warn!("task {task}: class {class} has no examples in the train split");
        }
    }
}

/// Trains a network in place and returns the per-iteration metrics trace.
///
/// Each iteration samples `batch_size` examples with replacement, averages
/// the loss and gradients, and applies one SGD step at the scheduled rate.
/// The full test set is evaluated every `eval_every` iterations and at the
/// final iteration. A non-finite loss aborts with diagnostics.
pub fn train<T: Scalar>(
    net: &mut Network<T>,
    train_set: &[Example<T>],
    test_set: &[Example<T>],
    task: Task,
    config: &TrainConfig,
) -> Result<TrainRun> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::config("train split is empty"));
    }
    warn_on_empty_classes(net, train_set, task);

    let mut rng = rng::chacha(rng::mix(config.seed, &[0x54524149, rng::fnv1a(task.name().as_bytes())]));
    let eval_interval = config.eval_interval();
    let mut metrics = Vec::with_capacity(config.iterations);

    for it in 0..config.iterations {
        let lr = lr_at(config, it);
        let batch: Vec<usize> = (0..config.batch_size)
            .map(|_| rng.gen_range(0..train_set.len()))
            .collect();

        let chunk_results: Result<Vec<(f64, usize, Vec<crate::engine::GradientBundle<T>>)>> = batch
            .par_chunks(GRAD_CHUNK)
            .map(|chunk| {
                let mut acc = Vec::new();
                let mut loss = 0.0;
                let mut correct = 0;
                for &i in chunk {
                    let r = sample_grad(net, &train_set[i], task)?;
                    accumulate_grads(&mut acc, &r.grads);
                    loss += r.loss;
                    correct += r.correct;
                }
                Ok((loss, correct, acc))
            })
            .collect();

        let mut total_grads = Vec::new();
        let mut total_loss = 0.0;
        let mut total_correct = 0usize;
        for (loss, correct, acc) in chunk_results? {
            accumulate_grads(&mut total_grads, &acc);
            total_loss += loss;
            total_correct += correct;
        }
        let train_loss = total_loss / config.batch_size as f64;
        if !train_loss.is_finite() {
            return Err(Error::NanLoss {
                iteration: it,
                lr,
                batch,
            });
        }
        scale_grads(&mut total_grads, T::from_f64(1.0 / config.batch_size as f64));
        sgd_step(&mut net.params, &total_grads, T::from_f64(lr))?;

        let test_acc = if (it + 1) % eval_interval == 0 || it + 1 == config.iterations {
            Some(evaluate(net, test_set, task)?)
        } else {
            None
        };
        metrics.push(MetricsRow {
            iteration: it + 1,
            lr,
            train_loss,
            train_acc: total_correct as f64 / config.batch_size as f64,
            test_acc,
        });
    }

    Ok(TrainRun {
        metrics,
        rng_state: format!("chacha12 seed={} words={}", config.seed, rng.get_word_pos()),
    })
}

/// Trains a head on precomputed feature vectors. Identical loop to [`train`];
/// the backbone that produced the features is never touched.
pub fn train_head<T: Scalar>(
    head: &mut Network<T>,
    train_features: &[Example<T>],
    test_features: &[Example<T>],
    task: Task,
    config: &TrainConfig,
) -> Result<TrainRun> {
    if let Some(ex) = train_features.first() {
        let want = head.spec.input.dims();
        if ex.image.shape() != want {
            return Err(Error::dimension(
                "train_head",
                format!("feature shape {:?} does not match head input {want:?}", ex.image.shape()),
            ));
        }
    }
    train(head, train_features, test_features, task, config)
}

/// Fraction of examples whose argmax logit equals the task label. Argmax
/// ties break toward the lowest class index.
pub fn evaluate<T: Scalar>(net: &Network<T>, examples: &[Example<T>], task: Task) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::config("evaluation set is empty"));
    }
    let per_chunk: Result<Vec<usize>> = examples
        .par_chunks(EVAL_CHUNK)
        .map(|chunk| {
            let mut correct = 0;
            for ex in chunk {
                let trace = forward(net, &ex.image)?;
                if argmax(trace.logits().data()) == ex.labels.get(task) {
                    correct += 1;
                }
            }
            Ok(correct)
        })
        .collect();
    let correct: usize = per_chunk?.into_iter().sum();
    Ok(correct as f64 / examples.len() as f64)
}

/// Per-example `(reference, label, prediction)` rows, for recounting
/// accuracy externally.
pub fn predictions<T: Scalar>(
    net: &Network<T>,
    examples: &[Example<T>],
    task: Task,
) -> Result<Vec<(String, usize, usize)>> {
    examples
        .iter()
        .map(|ex| {
            let trace = forward(net, &ex.image)?;
            Ok((
                ex.reference.clone(),
                ex.labels.get(task),
                argmax(trace.logits().data()),
            ))
        })
        .collect()
}
