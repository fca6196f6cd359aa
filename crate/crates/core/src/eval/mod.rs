//! Accuracy, confusion matrices, ROC/AUC and the six-dataset benchmark.

pub mod benchmark;
pub mod metrics;

pub use benchmark::{run_benchmark, write_outputs, BenchmarkOptions, BenchmarkOutput, BenchmarkReport, CellReport};
pub use metrics::{accuracy, confusion, roc, ConfusionMatrix, RocCurve};
