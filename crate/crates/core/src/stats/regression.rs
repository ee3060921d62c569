use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::RefinedRecord;
use crate::refine::RefineCoeffs;

/// Polynomial least-squares fit of degree 1 or 2. `beta2` is 0 for lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadFit {
    pub degree: usize,
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub r_squared: f64,
    pub sse: f64,
    pub sst: f64,
}

impl QuadFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.beta0 + self.beta1 * x + self.beta2 * x * x
    }
}

/// Least squares via Householder QR on the column-major design `cols`.
/// Returns `None` when a pivot vanishes relative to its column norm.
fn qr_solve(mut cols: Vec<Vec<f64>>, mut y: Vec<f64>) -> Option<Vec<f64>> {
    let p = cols.len();
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mut diag = vec![0.0; p];
    for k in 0..p {
        let alpha_norm = cols[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if alpha_norm <= 1e-10 * norms[k].max(1.0) {
            return None;
        }
        let alpha = if cols[k][k] > 0.0 { -alpha_norm } else { alpha_norm };
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        diag[k] = alpha;
        if vnorm2 == 0.0 {
            continue;
        }
        let reflect = |target: &mut [f64]| {
            let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm2;
            for (t, vi) in target.iter_mut().zip(&v) {
                *t -= f * vi;
            }
        };
        for col in cols.iter_mut().skip(k + 1) {
            reflect(&mut col[k..]);
        }
        reflect(&mut y[k..]);
    }
    // back substitution on R (upper triangle stored in cols, diagonal in diag)
    let mut beta = vec![0.0; p];
    for k in (0..p).rev() {
        let mut s = y[k];
        for j in k + 1..p {
            s -= cols[j][k] * beta[j];
        }
        beta[k] = s / diag[k];
    }
    Some(beta)
}

/// Ordinary least squares polynomial fit with `R^2 = 1 - SSE/SST`.
pub fn fit_poly(x: &[f64], y: &[f64], degree: usize) -> Result<QuadFit> {
    if !(1..=2).contains(&degree) {
        return Err(Error::UnsupportedDegree(degree));
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < degree + 2 {
        return Err(Error::TooFewObservations { needed: degree + 2, got: n });
    }
    let mut distinct: Vec<f64> = x.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < degree + 1 {
        return Err(Error::DegenerateDesign);
    }
    let my = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::ZeroVarianceResponse);
    }

    let mut cols = vec![vec![1.0; n], x.to_vec()];
    if degree == 2 {
        cols.push(x.iter().map(|v| v * v).collect());
    }
    let beta = qr_solve(cols, y.to_vec()).ok_or(Error::DegenerateDesign)?;
    let mut fit = QuadFit {
        degree,
        beta0: beta[0],
        beta1: beta[1],
        beta2: beta.get(2).copied().unwrap_or(0.0),
        r_squared: 0.0,
        sse: 0.0,
        sst,
    };
    fit.sse = x.iter().zip(y).map(|(&a, &b)| (b - fit.predict(a)).powi(2)).sum();
    fit.r_squared = 1.0 - fit.sse / sst;
    Ok(fit)
}

/// Linear and quadratic fits side by side, with the higher-R² model named.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelComparison {
    pub linear: QuadFit,
    pub quadratic: QuadFit,
    pub preferred_degree: usize,
}

pub fn compare_models(x: &[f64], y: &[f64]) -> Result<ModelComparison> {
    let linear = fit_poly(x, y, 1)?;
    let quadratic = fit_poly(x, y, 2)?;
    let preferred_degree = if quadratic.r_squared > linear.r_squared { 2 } else { 1 };
    Ok(ModelComparison { linear, quadratic, preferred_degree })
}

/// Fits module mark against assessment index and keeps the slope terms as
/// refinement coefficients; the intercept is replaced by the mark itself.
pub fn fit_refine_coeffs(records: &[RefinedRecord]) -> Result<(QuadFit, RefineCoeffs)> {
    let (x, y): (Vec<f64>, Vec<f64>) = records.iter().filter_map(|r| Some((f64::from(r.mai?), r.record.module_mark?))).unzip();
    let fit = fit_poly(&x, &y, 2)?;
    Ok((fit, RefineCoeffs { beta1: fit.beta1, beta2: fit.beta2 }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_quadratic_recovery() {
        let x: Vec<f64> = (0..12).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|k| 50.0 + 0.0035 * k - 0.05688 * k * k).collect();
        let f = fit_poly(&x, &y, 2).unwrap();
        assert!((f.beta0 - 50.0).abs() < 1e-9);
        assert!((f.beta1 - 0.0035).abs() < 1e-9);
        assert!((f.beta2 + 0.05688).abs() < 1e-9);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let l = fit_poly(&x, &y, 1).unwrap();
        assert!(l.r_squared <= f.r_squared);
    }

    #[test]
    fn linear_data_has_no_curvature() {
        let x: Vec<f64> = (0..8).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let f = fit_poly(&x, &y, 2).unwrap();
        assert!(f.beta2.abs() < 1e-9);
        assert!((f.beta1 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(fit_poly(&[1.0, 1.0, 1.0, 1.0], &[1.0, 2.0, 3.0, 4.0], 2), Err(Error::DegenerateDesign)));
        assert!(matches!(fit_poly(&[1.0, 2.0, 1.0, 2.0], &[1.0, 2.0, 3.0, 4.0], 2), Err(Error::DegenerateDesign)));
        assert!(matches!(fit_poly(&[1.0, 2.0, 3.0, 4.0], &[5.0; 4], 2), Err(Error::ZeroVarianceResponse)));
        assert!(matches!(fit_poly(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0], 2), Err(Error::TooFewObservations { .. })));
        assert!(matches!(fit_poly(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0], 3), Err(Error::UnsupportedDegree(3))));
    }

    #[test]
    fn comparison_prefers_curvature() {
        let x: Vec<f64> = (0..12).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|k| 60.0 - k * k).collect();
        assert_eq!(compare_models(&x, &y).unwrap().preferred_degree, 2);
    }
}
