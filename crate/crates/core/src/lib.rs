//! Evidential semi-supervised classification of hyperspectral pixels.
//!
//! The crate implements a closed perceive / act / correct loop on top of a
//! small evidential MLP:
//!
//! - [`evidential`]: Dirichlet evidence head, EDL and GCE losses with
//!   analytic gradients, AdamW, and test-time-augmented uncertainty.
//! - [`ugdss`]: histogram-adaptive uncertainty threshold, k-means++ diverse
//!   query selection, and uncertainty-scaled Gaussian feature perturbation.
//! - [`fdas`]: EMA-smoothed evidence, the evidence gap between the top two
//!   classes, dynamic thresholds, and reliable / ambiguous / noisy triage.
//! - [`protocol`]: pretrain, sample, retrain, evaluate.
//! - [`datacube`] and [`metrics`]: data handling and OA / AA / kappa.

pub mod cli;
pub mod config;
pub mod datacube;
pub mod error;
pub mod evidential;
pub mod fdas;
pub mod metrics;
pub mod protocol;
pub mod rng;
pub mod ugdss;

pub use error::{Error, Result};
