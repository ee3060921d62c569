use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::bands::DegreeBands;
use super::dataset::LabeledDataset;
use super::forest::{train_random_forest, ForestParams};
use super::metrics::{evaluate, Metrics};
use super::naive_bayes::train_naive_bayes;
use super::Classifier;
use crate::error::{Error, Result};
use crate::model::{MarkClass, RefinedRecord};

/// One student's yearly aggregates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudentYears {
    pub regno: String,
    pub year1_avg: f64,
    pub year1_mai: f64,
    pub year2_avg: f64,
}

/// Aggregates refined records per student: mean module mark in years 1 and
/// 2 and mean assessment index in year 1. Students missing either year, or
/// without any categorized year-1 module, are left out. Output is sorted by
/// regno.
pub fn build_cohort(records: &[RefinedRecord]) -> Vec<StudentYears> {
    #[derive(Default)]
    struct Acc {
        y1: (f64, usize),
        y2: (f64, usize),
        mai: (f64, usize),
    }
    let mut by_student: BTreeMap<&str, Acc> = BTreeMap::new();
    for r in records {
        let Some(mm) = r.record.module_mark else { continue };
        let acc = by_student.entry(&r.record.regno).or_default();
        match r.record.year_of_study {
            1 => {
                acc.y1.0 += mm;
                acc.y1.1 += 1;
                if let Some(m) = r.mai {
                    acc.mai.0 += f64::from(m);
                    acc.mai.1 += 1;
                }
            }
            2 => {
                acc.y2.0 += mm;
                acc.y2.1 += 1;
            }
            _ => {}
        }
    }
    by_student
        .into_iter()
        .filter(|(_, a)| a.y1.1 > 0 && a.y2.1 > 0 && a.mai.1 > 0)
        .map(|(regno, a)| StudentYears {
            regno: regno.to_string(),
            year1_avg: a.y1.0 / a.y1.1 as f64,
            year1_mai: a.mai.0 / a.mai.1 as f64,
            year2_avg: a.y2.0 / a.y2.1 as f64,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExperimentConfig {
    /// Fraction of each class used for training.
    pub split: f64,
    pub seed: u64,
    pub forest: ForestParams,
    pub bands: DegreeBands,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig { split: 0.7, seed: 0, forest: ForestParams::default(), bands: DegreeBands::UK }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureSetResult {
    pub features: Vec<String>,
    pub naive_bayes: Metrics,
    pub random_forest: Metrics,
}

/// Published accuracies, reported alongside results for comparison only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceValues {
    pub forest_ca_with_mai: f64,
    pub forest_ca_without_mai: f64,
    pub forest_ca: f64,
    pub naive_bayes_ca: f64,
}

impl ReferenceValues {
    pub const PUBLISHED: ReferenceValues =
        ReferenceValues { forest_ca_with_mai: 0.942, forest_ca_without_mai: 0.874, forest_ca: 0.942, naive_bayes_ca: 0.924 };
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub students: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub without_mai: FeatureSetResult,
    pub with_mai: FeatureSetResult,
    /// Forest CA with the index minus without.
    pub forest_ca_delta: f64,
    pub naive_bayes_ca_delta: f64,
    pub reference: ReferenceValues,
}

/// Per-class shuffle and cut; returns (train, test) indices in ascending order.
fn stratified_split(labels: &[MarkClass], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in MarkClass::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        let cut = (members.len() as f64 * fraction).round() as usize;
        train.extend_from_slice(&members[..cut]);
        test.extend_from_slice(&members[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn run_feature_set(
    names: &[&str],
    features: &[Vec<f64>],
    labels: &[MarkClass],
    train: &[usize],
    test: &[usize],
    forest: &ForestParams,
) -> Result<FeatureSetResult> {
    let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    let train_set = LabeledDataset::new(names.clone(), train.iter().map(|&i| (features[i].clone(), labels[i])).collect())?;
    let nb = train_naive_bayes(&train_set)?;
    let rf = train_random_forest(&train_set, forest)?;
    let score = |model: &dyn Classifier| -> Result<Metrics> {
        let preds = test
            .iter()
            .map(|&i| {
                let p = model.predict(&features[i])?;
                Ok((labels[i], p.class, p.probabilities))
            })
            .collect::<Result<Vec<_>>>()?;
        evaluate(&preds)
    };
    Ok(FeatureSetResult { features: names, naive_bayes: score(&nb)?, random_forest: score(&rf)? })
}

/// Predicts the year-2 degree class from the year-1 average, once without
/// and once with the year-1 mean assessment index as a second feature, on
/// the same stratified split.
pub fn mai_effect_experiment(students: &[StudentYears], config: &ExperimentConfig) -> Result<ExperimentReport> {
    if !(0.0 < config.split && config.split < 1.0) {
        return Err(Error::Config(format!("split must be in (0, 1), got {}", config.split)));
    }
    let labels = students.iter().map(|s| config.bands.classify(s.year2_avg)).collect::<Result<Vec<_>>>()?;
    let mut seen = labels.clone();
    seen.sort();
    seen.dedup();
    if seen.len() < 2 {
        return Err(Error::SingleClass);
    }

    let (train, test) = stratified_split(&labels, config.split, config.seed);
    if test.is_empty() {
        return Err(Error::InvalidDataset("empty evaluation split".to_string()));
    }
    let forest = ForestParams { seed: config.seed, ..config.forest };

    let base: Vec<Vec<f64>> = students.iter().map(|s| vec![s.year1_avg]).collect();
    let with: Vec<Vec<f64>> = students.iter().map(|s| vec![s.year1_avg, s.year1_mai]).collect();
    let without_mai = run_feature_set(&["year1_avg"], &base, &labels, &train, &test, &forest)?;
    let with_mai = run_feature_set(&["year1_avg", "year1_mai"], &with, &labels, &train, &test, &forest)?;

    Ok(ExperimentReport {
        students: students.len(),
        train_size: train.len(),
        test_size: test.len(),
        forest_ca_delta: with_mai.random_forest.ca - without_mai.random_forest.ca,
        naive_bayes_ca_delta: with_mai.naive_bayes.ca - without_mai.naive_bayes.ca,
        without_mai,
        with_mai,
        reference: ReferenceValues::PUBLISHED,
    })
}
