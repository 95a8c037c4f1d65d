//! Redundancy measurement and mitigation for multisensor process-monitoring
//! data and the small classifiers trained on it.
//!
//! Every measure funnels through one index,
//!
//! ```text
//! R(C, K) = 1 - (P(K ∪ C) - P(K)) / (|P(K)| + ε)
//! ```
//!
//! where `P` is a performance or information metric evaluated on a base `K`
//! and on the base extended by a component `C`. `R < 1` means `C` carries
//! something the base lacks, `R = 1` means `C` is fully redundant, and `R > 1`
//! means adding `C` actively hurts.
//!
//! The crate is organised by the level at which redundancy is measured:
//!
//! | module | level |
//! |--------|-------|
//! | [`metrics`] | the index itself, entropy, mutual information, balanced accuracy |
//! | [`sample`] | holistic batch redundancy, subgroup rates, downsampling, SMOTE |
//! | [`feature`] | correlation, MI pair redundancy, CMI gain, wrapper selection, PCA |
//! | [`signal`] | audio/video registration, downscaling, spectrograms, entropy sweep |
//! | [`sensor`] | cross-sensor MI, ridge mapping error, sensor-removal verdicts |
//! | [`model`] | MLP training, magnitude pruning, capacity search, ensembles |
//!
//! The crate is `no_std` and only needs `alloc`; file formats, the pipeline
//! and the CLI live in the `mlrm` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod feature;
pub mod linalg;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod sample;
pub mod sensor;
pub mod signal;
pub mod split;

pub use error::{Error, Result};
pub use matrix::{CodedMatrix, FeatureMatrix, LabelVector};
pub use metrics::{
    redundancy_index, Direction, Interpretation, MetricValue, RedundancyScore, DEFAULT_EPSILON,
    TAU_EQ, TAU_NUM,
};

/// Slack used when a redundancy score is compared against `1` after training
/// stochastic models.
pub const TAU_MODEL: f64 = 0.02;
