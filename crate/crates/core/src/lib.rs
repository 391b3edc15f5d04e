//! Mahalanobis metric learning for imbalanced binary classification.
//!
//! The learner decomposes pairwise constraints into four sets keyed by the
//! labels of the two examples in each pair (similar-positive,
//! similar-negative, dissimilar anchored at a positive, dissimilar anchored
//! at a negative) and gives every set the same total weight, so scarce
//! positives are not drowned out by the majority class. The metric is
//! parameterized by a projection matrix `L` with `M = LᵀL`, optimized with a
//! limited-memory quasi-Newton method from the identity, and evaluated with a
//! 3-nearest-neighbor classifier in the projected space.
//!
//! The crate also ships the surrounding experimental machinery: dataset
//! loading and stratified splitting, SMOTE and random under-sampling,
//! imbalance sweeps, stratified cross-validation with random hyperparameter
//! search, and a benchmark harness that writes CSV result tables.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod harness;
pub mod knn;
pub mod metric;
pub mod objective;
pub mod pairs;
pub mod resample;
pub mod seeding;
pub mod solver;

pub use dataset::{LabelColumn, LabeledDataset, RawDataset, Scaler, SplitSpec};
pub use error::{Error, Result};
pub use eval::{confusion, f1, ConfusionCounts, CvOutcome, EvalReport, HyperGrid, SplitOutcome};
pub use harness::{DatasetRegistry, ExperimentConfig, Method, Preprocessing};
pub use knn::KnnModel;
pub use metric::ProjectionMatrix;
pub use objective::{HyperParams, PairStrategy, WeightingMode};
pub use pairs::PairSets;
pub use resample::ImbalanceTarget;
pub use solver::{FitOutcome, SolverOptions};
