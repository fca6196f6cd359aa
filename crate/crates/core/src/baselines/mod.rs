//! Classical classifiers operating directly on raw feature vectors.

pub mod bayes;
pub mod fnn;
pub mod forest;
pub mod svm;
pub mod tree;

pub use bayes::{predict_bayes, train_bayes, GaussianClassStats};
pub use fnn::{predict_fnn, train_fnn, FnnModel};
pub use forest::{predict_forest, train_forest, ForestConfig, ForestModel};
pub use svm::{predict_svm, train_svm, Kernel, SvmConfig, SvmModel};
pub use tree::{train_tree, TreeConfig, TreeNode};
