//! Cohort identification from a handful of self-disclosed members and
//! population-level rates.
//!
//! [`sgd::train`] searches for a hyperplane whose top-percentile individuals
//! both cover the disclosed positives and reproduce the ranking of a
//! per-property statistic. The [`evaluation`] module holds the experiment
//! protocols and [`synth`] generates populations with known ground truth.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod objective;
pub mod sgd;
pub mod sparse;
pub mod stats;
pub mod synth;

pub use baselines::{augment_with_pi, train_logistic, train_perceptron, ClassifierKind, LinearClassifier, LogisticConfig};
pub use dataset::{load_dataset, save_dataset, CohortDataset};
pub use error::{Error, Result};
pub use objective::ObjectiveValue;
pub use sgd::{train, HyperplaneModel, StabilityReport, TrainConfig, TrainOutput, TrainTrace};
pub use sparse::{SparseMatrix, SparseRow};
pub use stats::LikelihoodVector;
pub use synth::{generate, preset, GenConfig};
