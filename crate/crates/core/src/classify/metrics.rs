use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::MarkClass;

const K: usize = MarkClass::COUNT;

/// Confusion matrix (rows actual, columns predicted) and macro scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub confusion: [[u64; K]; K],
    pub n: u64,
    pub ca: f64,
    pub auc: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    /// Classes appearing as actual or predicted labels.
    pub classes: Vec<MarkClass>,
    /// Per-class terms that were undefined and scored as 0 (or skipped, for AUC).
    pub flags: Vec<String>,
}

impl Metrics {
    /// Each column as percentages of its predicted total, `None` for empty columns.
    pub fn column_percentages(&self) -> [[Option<f64>; K]; K] {
        let mut out = [[None; K]; K];
        for j in 0..K {
            let col: u64 = (0..K).map(|i| self.confusion[i][j]).sum();
            if col > 0 {
                for (i, row) in out.iter_mut().enumerate() {
                    row[j] = Some(100.0 * self.confusion[i][j] as f64 / col as f64);
                }
            }
        }
        out
    }
}

/// Ranking AUC of `scores` for positives vs negatives, ties counted half.
fn ranking_auc(scores: &[(f64, bool)]) -> Option<f64> {
    let pos = scores.iter().filter(|s| s.1).count();
    let neg = scores.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    // midranks
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1].0 == sorted[i].0 {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * sorted[i..=j].iter().filter(|s| s.1).count() as f64;
        i = j + 1;
    }
    let (p, q) = (pos as f64, neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

/// Scores `(actual, predicted, probabilities)` triples.
///
/// Precision, recall and F1 are macro averages over the classes that occur
/// as actual or predicted labels. AUC is the macro one-vs-rest ranking AUC
/// over classes with both positive and negative examples.
pub fn evaluate(predictions: &[(MarkClass, MarkClass, [f64; K])]) -> Result<Metrics> {
    if predictions.is_empty() {
        return Err(Error::NoRecords);
    }
    let mut confusion = [[0u64; K]; K];
    for (a, p, _) in predictions {
        confusion[a.index()][p.index()] += 1;
    }
    let n = predictions.len() as u64;
    let trace: u64 = (0..K).map(|i| confusion[i][i]).sum();

    let classes: Vec<MarkClass> = MarkClass::ALL
        .iter()
        .copied()
        .filter(|c| {
            let i = c.index();
            (0..K).any(|j| confusion[i][j] > 0 || confusion[j][i] > 0)
        })
        .collect();

    let mut flags = Vec::new();
    let (mut precision, mut recall, mut f1) = (0.0, 0.0, 0.0);
    for c in &classes {
        let i = c.index();
        let tp = confusion[i][i] as f64;
        let predicted: u64 = (0..K).map(|r| confusion[r][i]).sum();
        let actual: u64 = confusion[i].iter().sum();
        let p = if predicted > 0 {
            tp / predicted as f64
        } else {
            flags.push(format!("precision undefined for {c}"));
            0.0
        };
        let r = if actual > 0 {
            tp / actual as f64
        } else {
            flags.push(format!("recall undefined for {c}"));
            0.0
        };
        precision += p;
        recall += r;
        f1 += if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    }
    let m = classes.len() as f64;

    let mut auc_sum = 0.0;
    let mut auc_n = 0;
    for c in &classes {
        let scores: Vec<(f64, bool)> = predictions.iter().map(|(a, _, probs)| (probs[c.index()], a == c)).collect();
        match ranking_auc(&scores) {
            Some(v) => {
                auc_sum += v;
                auc_n += 1;
            }
            None => flags.push(format!("auc undefined for {c}")),
        }
    }

    Ok(Metrics {
        confusion,
        n,
        ca: trace as f64 / n as f64,
        auc: if auc_n > 0 { auc_sum / auc_n as f64 } else { 0.0 },
        f1: f1 / m,
        precision: precision / m,
        recall: recall / m,
        classes,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probs(class: MarkClass, p: f64, other: MarkClass) -> [f64; K] {
        let mut v = [0.0; K];
        v[class.index()] = p;
        v[other.index()] = 1.0 - p;
        v
    }

    const A: MarkClass = MarkClass::Fail;
    const B: MarkClass = MarkClass::First;

    #[test]
    fn accuracy_from_confusion() {
        // [[2,1],[0,1]]
        let preds = vec![(A, A, probs(A, 0.9, B)), (A, A, probs(A, 0.8, B)), (A, B, probs(A, 0.4, B)), (B, B, probs(A, 0.1, B))];
        let m = evaluate(&preds).unwrap();
        assert_eq!(m.confusion[A.index()][A.index()], 2);
        assert_eq!(m.confusion[A.index()][B.index()], 1);
        assert_eq!(m.ca, 0.75);
        assert_eq!(m.auc, 1.0);
        assert_eq!(m.n, 4);
    }

    #[test]
    fn one_sided_predictions() {
        let preds = vec![(A, A, probs(A, 1.0, B)), (A, A, probs(A, 1.0, B)), (B, A, probs(A, 1.0, B)), (B, A, probs(A, 1.0, B))];
        let m = evaluate(&preds).unwrap();
        assert_eq!(m.ca, 0.5);
        assert_eq!(m.recall, 0.5);
        assert_eq!(m.precision, 0.25);
        assert!((m.f1 - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.auc, 0.5);
        assert!(m.flags.iter().any(|f| f.contains("precision")));
    }

    #[test]
    fn ties_count_half() {
        let s = [(0.5, true), (0.5, false), (0.2, false), (0.9, true)];
        // pairs: (0.5,0.5)=0.5, (0.5,0.2)=1, (0.9,0.5)=1, (0.9,0.2)=1
        assert_eq!(ranking_auc(&s), Some(3.5 / 4.0));
    }

    #[test]
    fn column_percentages() {
        let preds = vec![(A, A, probs(A, 1.0, B)), (B, A, probs(A, 1.0, B)), (B, B, probs(A, 0.0, B))];
        let m = evaluate(&preds).unwrap();
        let pct = m.column_percentages();
        assert_eq!(pct[A.index()][A.index()], Some(50.0));
        assert_eq!(pct[B.index()][B.index()], Some(100.0));
        assert_eq!(pct[A.index()][MarkClass::Pass.index()], None);
    }

    #[test]
    fn empty_is_error() {
        assert!(evaluate(&[]).is_err());
    }
}
