use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::TranscriptRecord;

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Numeric record fields usable as correlation factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Factor {
    ExamWeighting,
    CswkWeighting,
    CswkMark,
    ExamMark,
    ModuleMark,
}

impl Factor {
    pub fn value(self, r: &TranscriptRecord) -> Option<f64> {
        match self {
            Factor::ExamWeighting => r.exam_weighting.map(f64::from),
            Factor::CswkWeighting => r.cswk_weighting.map(f64::from),
            Factor::CswkMark => r.cswk_mark,
            Factor::ExamMark => r.exam_mark,
            Factor::ModuleMark => r.module_mark,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Factor::ExamWeighting => "EXW",
            Factor::CswkWeighting => "CWW",
            Factor::CswkMark => "CW mark",
            Factor::ExamMark => "Exam mark",
            Factor::ModuleMark => "Module mark",
        }
    }

    /// Factor order of the published correlation table.
    pub const TABLE: [Factor; 5] =
        [Factor::ExamWeighting, Factor::CswkWeighting, Factor::CswkMark, Factor::ExamMark, Factor::ModuleMark];
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Strictly lower-triangular correlation matrix: `cells[i][j]` for `j < i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub factors: Vec<Factor>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        match i.cmp(&j) {
            std::cmp::Ordering::Greater => self.cells[i][j],
            std::cmp::Ordering::Less => self.cells[j][i],
            std::cmp::Ordering::Equal => None,
        }
    }
}

/// Pairwise correlations over complete cases of each pair. Degenerate pairs
/// (too few cases, constant values) are missing cells.
pub fn correlation_matrix(records: &[TranscriptRecord], factors: &[Factor]) -> CorrelationMatrix {
    let cells = (0..factors.len())
        .map(|i| {
            (0..i)
                .map(|j| {
                    let (x, y): (Vec<f64>, Vec<f64>) =
                        records.iter().filter_map(|r| Some((factors[i].value(r)?, factors[j].value(r)?))).unzip();
                    pearson(&x, &y).ok()
                })
                .collect()
        })
        .collect();
    CorrelationMatrix { factors: factors.to_vec(), cells }
}
