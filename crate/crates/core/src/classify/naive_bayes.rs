use super::dataset::{LabeledDataset, Prediction};
use super::Classifier;
use crate::error::{Error, Result};
use crate::model::MarkClass;

#[derive(Debug, Clone)]
struct ClassModel {
    class: MarkClass,
    log_prior: f64,
    means: Vec<f64>,
    variances: Vec<f64>,
}

/// Gaussian Naive Bayes over continuous features.
#[derive(Debug, Clone)]
pub struct GaussianNaiveBayes {
    n_features: usize,
    classes: Vec<ClassModel>,
}

fn mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Fits per-class feature means and variances and frequency priors.
///
/// Variances are floored at `1e-9 * (global feature variance + 1)`.
pub fn train_naive_bayes(data: &LabeledDataset) -> Result<GaussianNaiveBayes> {
    data.require_two_classes()?;
    let d = data.n_features();
    let n = data.len() as f64;
    let floors: Vec<f64> = (0..d)
        .map(|j| {
            let (_, v) = mean_var(data.rows().iter().map(move |(f, _)| f[j]));
            1e-9 * (v + 1.0)
        })
        .collect();
    let counts = data.class_counts();
    let classes = MarkClass::ALL
        .iter()
        .filter(|c| counts[c.index()] > 0)
        .map(|&class| {
            let members = data.rows().iter().filter(move |(_, c)| *c == class);
            let (means, variances) = (0..d)
                .map(|j| {
                    let (m, v) = mean_var(members.clone().map(move |(f, _)| f[j]));
                    (m, v.max(floors[j]))
                })
                .unzip();
            ClassModel { class, log_prior: (counts[class.index()] as f64 / n).ln(), means, variances }
        })
        .collect();
    Ok(GaussianNaiveBayes { n_features: d, classes })
}

impl Classifier for GaussianNaiveBayes {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict(&self, features: &[f64]) -> Result<Prediction> {
        if features.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, got: features.len() });
        }
        let log_post: Vec<f64> = self
            .classes
            .iter()
            .map(|c| {
                c.log_prior
                    + features
                        .iter()
                        .zip(c.means.iter().zip(&c.variances))
                        .map(|(x, (m, v))| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m).powi(2) / v))
                        .sum::<f64>()
            })
            .collect();
        let max = log_post.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = log_post.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut probabilities = [0.0; MarkClass::COUNT];
        for (c, w) in self.classes.iter().zip(weights) {
            probabilities[c.class.index()] = w / total;
        }
        Ok(Prediction::from_probabilities(probabilities))
    }
}
