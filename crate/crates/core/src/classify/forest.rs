use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{LabeledDataset, Prediction};
use super::Classifier;
use crate::error::{Error, Result};
use crate::model::MarkClass;

const K: usize = MarkClass::COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    /// `None` grows trees until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features tried per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { trees: 100, max_depth: None, min_leaf: 1, max_features: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(MarkClass),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> MarkClass {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(c) => return c,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

fn gini(counts: &[usize; K], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / nf).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize; K]) -> MarkClass {
    let mut best = 0;
    for i in 1..K {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    MarkClass::ALL[best]
}

struct Builder<'a> {
    data: &'a LabeledDataset,
    params: &'a ForestParams,
    mtry: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Builder<'_> {
    fn label(&self, i: usize) -> usize {
        self.data.rows()[i].1.index()
    }

    fn value(&self, i: usize, f: usize) -> f64 {
        self.data.rows()[i].0[f]
    }

    fn best_split_on(&self, idx: &mut [usize], feature: usize, total: &[usize; K]) -> Option<BestSplit> {
        idx.sort_by(|&a, &b| self.value(a, feature).total_cmp(&self.value(b, feature)).then(a.cmp(&b)));
        let n = idx.len();
        let min_leaf = self.params.min_leaf.max(1);
        let mut left = [0usize; K];
        let mut best: Option<BestSplit> = None;
        for pos in 0..n - 1 {
            left[self.label(idx[pos])] += 1;
            let n_left = pos + 1;
            let (v, next) = (self.value(idx[pos], feature), self.value(idx[pos + 1], feature));
            if v == next || n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let mut right = *total;
            for k in 0..K {
                right[k] -= left[k];
            }
            let score = (n_left as f64 * gini(&left, n_left) + (n - n_left) as f64 * gini(&right, n - n_left)) / n as f64;
            if best.as_ref().is_none_or(|b| score < b.score) {
                let mid = v + (next - v) / 2.0;
                // guard against the midpoint rounding onto the upper value
                let threshold = if mid < next { mid } else { v };
                best = Some(BestSplit { feature, threshold, score });
            }
        }
        best
    }

    fn build(&mut self, idx: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let mut counts = [0usize; K];
        for &i in idx.iter() {
            counts[self.label(i)] += 1;
        }
        let n = idx.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || n < 2 * self.params.min_leaf.max(1) {
            self.nodes.push(Node::Leaf(majority(&counts)));
            return self.nodes.len() - 1;
        }

        let d = self.data.n_features();
        let candidates = sample(rng, d, self.mtry).into_vec();
        let parent = gini(&counts, n);
        let mut best: Option<BestSplit> = None;
        let consider = |features: &[usize], best: &mut Option<BestSplit>, this: &Self, idx: &mut [usize]| {
            for &f in features {
                if let Some(s) = this.best_split_on(idx, f, &counts) {
                    if best.as_ref().is_none_or(|b| s.score < b.score) {
                        *best = Some(s);
                    }
                }
            }
        };
        consider(&candidates, &mut best, self, idx);
        if best.is_none() {
            // every sampled feature was constant here; fall back to the rest
            let rest: Vec<usize> = (0..d).filter(|f| !candidates.contains(f)).collect();
            consider(&rest, &mut best, self, idx);
        }
        let Some(split) = best.filter(|s| s.score < parent) else {
            self.nodes.push(Node::Leaf(majority(&counts)));
            return self.nodes.len() - 1;
        };

        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf(majority(&counts)));
        idx.sort_by(|&a, &b| {
            let (va, vb) = (self.value(a, split.feature), self.value(b, split.feature));
            (va > split.threshold).cmp(&(vb > split.threshold)).then(a.cmp(&b))
        });
        let cut = idx.partition_point(|&i| self.value(i, split.feature) <= split.threshold);
        let (l, r) = idx.split_at_mut(cut);
        let left = self.build(l, depth + 1, rng);
        let right = self.build(r, depth + 1, rng);
        self.nodes[slot] = Node::Split { feature: split.feature, threshold: split.threshold, left, right };
        slot
    }
}

/// Bagged CART trees (Gini) with per-split random feature subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    n_features: usize,
    trees: Vec<Tree>,
}

impl RandomForest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}

fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

/// Trains a forest. Each tree draws its bootstrap sample and feature subsets
/// from its own stream of the seeded generator, so the result does not
/// depend on how trees are scheduled across threads.
pub fn train_random_forest(data: &LabeledDataset, params: &ForestParams) -> Result<RandomForest> {
    data.require_two_classes()?;
    if params.trees == 0 {
        return Err(Error::Config("forest needs at least one tree".to_string()));
    }
    let d = data.n_features();
    if d == 0 {
        return Err(Error::InvalidDataset("no features".to_string()));
    }
    let mtry = params.max_features.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize).clamp(1, d);
    let n = data.len();
    let trees = (0..params.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(params.seed, t);
            let mut idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut builder = Builder { data, params, mtry, nodes: Vec::new() };
            builder.build(&mut idx, 0, &mut rng);
            Tree { nodes: builder.nodes }
        })
        .collect();
    Ok(RandomForest { n_features: d, trees })
}

impl Classifier for RandomForest {
    fn n_features(&self) -> usize {
        self.n_features
    }

    /// Majority vote; probabilities are vote shares.
    fn predict(&self, features: &[f64]) -> Result<Prediction> {
        if features.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, got: features.len() });
        }
        let mut votes = [0usize; K];
        for t in &self.trees {
            votes[t.predict(features).index()] += 1;
        }
        let total = self.trees.len() as f64;
        Ok(Prediction::from_probabilities(votes.map(|v| v as f64 / total)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: Vec<(Vec<f64>, MarkClass)>) -> LabeledDataset {
        let d = rows[0].0.len();
        LabeledDataset::new((0..d).map(|i| format!("f{i}")).collect(), rows).unwrap()
    }

    fn xor(n: usize, seed: u64) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n)
            .map(|_| {
                let (x, y): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let label = if (x > 0.0) ^ (y > 0.0) { MarkClass::First } else { MarkClass::Fail };
                (vec![x, y], label)
            })
            .collect();
        ds(rows)
    }

    #[test]
    fn same_seed_same_model() {
        let data = xor(200, 1);
        let p = ForestParams { trees: 20, seed: 9, ..Default::default() };
        let a = train_random_forest(&data, &p).unwrap();
        let b = train_random_forest(&data, &p).unwrap();
        assert_eq!(a, b);
        let c = train_random_forest(&data, &ForestParams { seed: 10, ..p }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn learns_xor() {
        let train = xor(400, 2);
        let test = xor(400, 3);
        let m = train_random_forest(&train, &ForestParams { trees: 50, seed: 4, ..Default::default() }).unwrap();
        let correct = test.rows().iter().filter(|(f, c)| m.predict(f).unwrap().class == *c).count();
        assert!(correct as f64 / test.len() as f64 >= 0.9);
    }

    #[test]
    fn depth_one_is_a_stump() {
        let data = xor(100, 5);
        let m = train_random_forest(&data, &ForestParams { trees: 3, max_depth: Some(1), ..Default::default() }).unwrap();
        for t in &m.trees {
            assert!(t.nodes.len() <= 3);
        }
        let m = train_random_forest(&data, &ForestParams { trees: 3, max_depth: Some(0), ..Default::default() }).unwrap();
        assert!(m.trees.iter().all(|t| t.nodes.len() == 1));
    }

    #[test]
    fn pure_trees_recall_training_points() {
        // distinct points, full depth: any tree whose bootstrap holds a point
        // classifies it correctly, so a one-tree forest fed every point does
        let rows: Vec<_> =
            (0..6).map(|i| (vec![i as f64], if i % 2 == 0 { MarkClass::Pass } else { MarkClass::Third })).collect();
        let data = ds(rows.clone());
        for seed in 0..20 {
            let m = train_random_forest(&data, &ForestParams { trees: 1, seed, ..Default::default() }).unwrap();
            let mut rng = tree_rng(seed, 0);
            let boot: Vec<usize> = (0..6).map(|_| rng.random_range(0..6)).collect();
            for &i in &boot {
                let p = m.predict(&rows[i].0).unwrap();
                assert_eq!(p.probabilities[rows[i].1.index()], 1.0);
            }
        }
    }

    #[test]
    fn errors() {
        let one = ds(vec![(vec![1.0], MarkClass::Pass), (vec![2.0], MarkClass::Pass)]);
        assert!(matches!(train_random_forest(&one, &ForestParams::default()), Err(Error::SingleClass)));
        let two = ds(vec![(vec![1.0], MarkClass::Pass), (vec![2.0], MarkClass::First)]);
        assert!(train_random_forest(&two, &ForestParams { trees: 0, ..Default::default() }).is_err());
        let m = train_random_forest(&two, &ForestParams { trees: 2, ..Default::default() }).unwrap();
        assert!(matches!(m.predict(&[]), Err(Error::DimensionMismatch { .. })));
    }
}
