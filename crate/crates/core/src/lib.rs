//! Fuzzy convolution pipeline for tabular classification.
//!
//! Each feature vector is fuzzified into five linguistic terms per feature,
//! the memberships are drawn as a grid of squares whose areas track the
//! membership degrees, and a small CNN is trained on the resulting images.
//! Classical baselines (decision tree, random forest, Gaussian Bayes, SVM,
//! fuzzy neural network) and a benchmark harness over six synthetic 2-D
//! datasets are included for comparison.

pub mod baselines;
pub mod checkpoint;
pub mod cnn;
pub mod config;
pub mod datasets;
pub mod error;
pub mod eval;
pub mod fuzzy;
pub mod imagemap;
pub mod pipeline;
pub mod seed;

pub use error::{Error, Result};
