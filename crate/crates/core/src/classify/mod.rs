//! Year-2 outcome prediction: Gaussian Naive Bayes, a seeded random forest,
//! evaluation metrics and the with/without assessment-index experiment.

mod bands;
mod dataset;
mod experiment;
mod forest;
mod metrics;
mod naive_bayes;

pub use bands::{bin_degree_class, DegreeBands};
pub use dataset::{LabeledDataset, Prediction};
pub use experiment::{
    build_cohort, mai_effect_experiment, ExperimentConfig, ExperimentReport, FeatureSetResult, ReferenceValues, StudentYears,
};
pub use forest::{train_random_forest, ForestParams, RandomForest};
pub use metrics::{evaluate, Metrics};
pub use naive_bayes::{train_naive_bayes, GaussianNaiveBayes};

use crate::error::Result;

/// A trained model.
pub trait Classifier {
    fn n_features(&self) -> usize;
    fn predict(&self, features: &[f64]) -> Result<Prediction>;
}
