use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::MarkClass;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    feature_names: Vec<String>,
    rows: Vec<(Vec<f64>, MarkClass)>,
}

impl LabeledDataset {
    pub fn new(feature_names: Vec<String>, rows: Vec<(Vec<f64>, MarkClass)>) -> Result<Self> {
        let d = feature_names.len();
        if let Some((f, _)) = rows.iter().find(|(f, _)| f.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: f.len() });
        }
        if rows.iter().any(|(f, _)| f.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidDataset("non-finite feature value".to_string()));
        }
        Ok(LabeledDataset { feature_names, rows })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn rows(&self) -> &[(Vec<f64>, MarkClass)] {
        &self.rows
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row count per class, indexed by `MarkClass::index`.
    pub fn class_counts(&self) -> [usize; MarkClass::COUNT] {
        let mut counts = [0; MarkClass::COUNT];
        for (_, c) in &self.rows {
            counts[c.index()] += 1;
        }
        counts
    }

    pub(crate) fn require_two_classes(&self) -> Result<()> {
        if self.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
            return Err(Error::SingleClass);
        }
        Ok(())
    }
}

/// Predicted class and a probability for every `MarkClass`, indexed by
/// `MarkClass::index`. Classes unseen in training get probability 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub class: MarkClass,
    pub probabilities: [f64; MarkClass::COUNT],
}

impl Prediction {
    /// Argmax, ties going to the lower class.
    pub(crate) fn from_probabilities(probabilities: [f64; MarkClass::COUNT]) -> Self {
        let mut best = 0;
        for i in 1..MarkClass::COUNT {
            if probabilities[i] > probabilities[best] {
                best = i;
            }
        }
        Prediction { class: MarkClass::ALL[best], probabilities }
    }
}
