//! Pre-processing: inferring missing assessment methods from weightings and
//! removing records without a module mark.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AssessmentMethod, TranscriptRecord};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CleanseReport {
    pub methods_inferred: usize,
    pub records_dropped: usize,
    /// `records_dropped / input size`, 0 for empty input.
    pub dropped_fraction: f64,
    /// The same quantity expressed as a percentage.
    pub dropped_percent: f64,
    /// Records still lacking an assessment method.
    pub unresolved: usize,
    /// Input positions of records whose weightings contradict each other.
    pub inconsistent: Vec<usize>,
}

/// Infers the assessment method from the weighting pair.
///
/// A lone coursework weighting is completed to an exam weighting of
/// `100 - cswk` before the tests run.
pub fn infer_assessment_method(exam_weighting: Option<u8>, cswk_weighting: Option<u8>) -> Result<Option<AssessmentMethod>> {
    let exam = match (exam_weighting, cswk_weighting) {
        (None, None) => return Ok(None),
        (Some(e), Some(c)) => {
            if u16::from(e) + u16::from(c) != 100 {
                return Err(Error::InconsistentWeightings { exam: e, coursework: c });
            }
            e
        }
        (Some(e), None) => {
            if e > 100 {
                return Err(Error::InconsistentWeightings { exam: e, coursework: 0 });
            }
            e
        }
        (None, Some(c)) => {
            if c > 100 {
                return Err(Error::InconsistentWeightings { exam: 0, coursework: c });
            }
            100 - c
        }
    };
    Ok(Some(match exam {
        100 => AssessmentMethod::Exam,
        0 => AssessmentMethod::Coursework,
        _ => AssessmentMethod::Both,
    }))
}

/// Fills missing assessment methods where the weightings allow it. Records
/// that already carry a method are never touched.
pub fn fill_missing_methods(records: Vec<TranscriptRecord>) -> (Vec<TranscriptRecord>, CleanseReport) {
    let mut report = CleanseReport::default();
    let mut out = records;
    for (i, r) in out.iter_mut().enumerate() {
        if r.assessment_method.is_some() {
            continue;
        }
        match infer_assessment_method(r.exam_weighting, r.cswk_weighting) {
            Ok(Some(m)) => {
                r.assessment_method = Some(m);
                report.methods_inferred += 1;
            }
            Ok(None) => {}
            Err(_) => report.inconsistent.push(i),
        }
    }
    report.unresolved = out.iter().filter(|r| r.assessment_method.is_none()).count();
    (out, report)
}

/// Removes records lacking a module mark, preserving order.
pub fn drop_markless(records: Vec<TranscriptRecord>) -> (Vec<TranscriptRecord>, CleanseReport) {
    let total = records.len();
    let kept: Vec<TranscriptRecord> = records.into_iter().filter(|r| r.module_mark.is_some()).collect();
    let dropped = total - kept.len();
    let fraction = if total == 0 { 0.0 } else { dropped as f64 / total as f64 };
    let report = CleanseReport {
        records_dropped: dropped,
        dropped_fraction: fraction,
        dropped_percent: fraction * 100.0,
        unresolved: kept.iter().filter(|r| r.assessment_method.is_none()).count(),
        ..CleanseReport::default()
    };
    (kept, report)
}

/// Runs method inference followed by markless removal.
pub fn cleanse(records: Vec<TranscriptRecord>) -> (Vec<TranscriptRecord>, CleanseReport) {
    let (filled, fill) = fill_missing_methods(records);
    let (kept, drop) = drop_markless(filled);
    let report = CleanseReport { methods_inferred: fill.methods_inferred, inconsistent: fill.inconsistent, ..drop };
    (kept, report)
}
