//! Multi-task facial-attribute feature learning and fusion.
//!
//! `facefuse` trains small convolutional classifiers for four tasks on one
//! image set — identity, age, race, and gender — extracts their high-level
//! features, measures how features trained for one task transfer to the
//! others, and trains fusion heads over concatenated features.
//!
//! The crate is organized around five subsystems:
//!
//! - [`engine`]: tensors, layer forward/backward passes, softmax
//!   cross-entropy, SGD, and finite-difference gradient checking.
//! - [`model`]: the backbone (3 conv + 2 FC layers) and the cross-task and
//!   fusion head architectures.
//! - [`data`]: JSONL manifests, PGM/PPM images, deterministic augmentation,
//!   grouped train/test splitting, and a synthetic labeled-face generator.
//! - [`train`]: mini-batch SGD with step learning-rate decay, CSV metrics,
//!   evaluation, and checkpointing.
//! - [`expt`]: feature extraction, the 4x4 cross-task accuracy matrix, and
//!   the own/other-three/all fusion study, with report emission.
//!
//! # Runnable examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! cargo run --release -p facefuse --example gradcheck
//! cargo run --release -p facefuse --example synth_dataset
//! cargo run --release -p facefuse --example train_backbone
//! cargo run --release -p facefuse --example extract_features
//! cargo run --release -p facefuse --example cross_task_matrix
//! cargo run --release -p facefuse --example fusion_study
//! ```
//!
//! The same flows are scriptable through the `facefuse` binary; see the
//! [`cli`] module or run `facefuse --help`.
//!
//! # Determinism
//!
//! Every random decision derives from explicit seeds via ChaCha streams.
//! Batch-gradient reduction and evaluation use fixed chunking and ordered
//! reduction, so outputs are byte-identical across runs and independent of
//! the `FACEFUSE_THREADS` worker cap.

pub mod cli;
pub mod data;
pub mod engine;
mod error;
pub mod expt;
pub mod model;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
