use serde::Serialize;

use super::tdist::two_tailed_p;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTestResult {
    pub t: f64,
    /// Two-tailed.
    pub p: f64,
    pub df: u32,
    pub mean_diff: f64,
}

/// Paired t-test on `a - b` using the unbiased variance of the differences.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let ss: f64 = diffs.iter().map(|d| (d - mean).powi(2)).sum();
    let var = ss / (nf - 1.0);
    // relative test: constant shifts leave rounding-level spread
    let scale = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if var.sqrt() <= 1e-12 * scale {
        return Err(Error::DegeneratePairs);
    }
    let t = mean / (var / nf).sqrt();
    let df = n - 1;
    Ok(TTestResult { t, p: two_tailed_p(t, df as f64), df: df as u32, mean_diff: mean })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors() {
        assert!(matches!(paired_ttest(&[1.0, 2.0], &[1.0]), Err(Error::LengthMismatch(2, 1))));
        assert!(matches!(paired_ttest(&[1.0], &[1.0]), Err(Error::TooFewObservations { .. })));
        let a = [1.3, 2.7, 3.1, 9.9];
        let b: Vec<f64> = a.iter().map(|x| x + 1.0).collect();
        assert!(matches!(paired_ttest(&a, &b), Err(Error::DegeneratePairs)));
    }

    #[test]
    fn hand_computed() {
        // d = (1, 2, 3): mean 2, sd 1, t = 2 / (1 / sqrt 3)
        let r = paired_ttest(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((r.t - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.df, 2);
        assert_eq!(r.mean_diff, 2.0);
    }
}
