//! Transmittance multispectral image analysis for reheated frying oil.
//!
//! The pipeline reads 9-band transmittance spectral cubes of oil samples,
//! preprocesses them (dark-current removal, windowed filtering, window
//! cropping), reduces each labelled sample to its Bhattacharyya distance
//! against a pure-oil reference, estimates the reheat cycle count with a
//! grid-tuned RBF SVM, and detects critical reheat classes with a
//! sigma-sweep spectral-clustering framework (largest-gap-value and
//! largest-bandwidth prominent-mode selection).
//!
//! Modules:
//! - [`cube`]: spectral-cube model, MSIC container, preprocessing chain
//! - [`signatures`]: labelled signature sets and their CSV container
//! - [`features`]: Gaussian statistics, FDA reduction, Bhattacharyya distance
//! - [`classifier`]: one-vs-one RBF SVM (SMO), grid sweep, metrics, baselines
//! - [`sclust`]: affinity graphs, sigma-sweep eigengaps, LGV/LBW selection,
//!   spectral clustering, critical-class extraction
//! - [`synth`]: planted-drift dataset generator and dataset reformation
//! - [`pipeline`]: end-to-end train/predict/cluster plumbing
//! - [`cli`]: command implementations and run manifests

pub mod classifier;
pub mod cli;
pub mod cube;
pub mod error;
pub mod features;
pub mod kmeans;
pub mod linalg;
pub mod pipeline;
pub mod sclust;
pub mod seeding;
pub mod signatures;
pub mod synth;

pub use error::{Error, Result};
