//! Refined module marks.
//!
//! A refined mark is the module mark plus a quadratic in the module's
//! assessment index: `rmm = mm + beta1 * mai + beta2 * mai^2`, left
//! unchanged for index 0 and clamped to [0, 100].

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mai::{categorize, ClassTables};
use crate::model::{AssessmentMethod, RefineFlag, RefinedRecord, TranscriptRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefineCoeffs {
    pub beta1: f64,
    pub beta2: f64,
}

impl RefineCoeffs {
    pub const DEFAULT: RefineCoeffs = RefineCoeffs { beta1: 0.0035, beta2: -0.05688 };

    /// Mark adjustment for an index, before clamping.
    pub fn delta(&self, mai: u32) -> f64 {
        let k = f64::from(mai);
        self.beta1 * k + self.beta2 * k * k
    }
}

impl Default for RefineCoeffs {
    fn default() -> Self {
        Self::DEFAULT
    }
}

pub fn rmm(module_mark: f64, mai: u32, coeffs: RefineCoeffs) -> f64 {
    if mai == 0 {
        return module_mark;
    }
    (module_mark + coeffs.delta(mai)).clamp(0.0, 100.0)
}

fn refine_one(record: &TranscriptRecord, tables: &ClassTables, coeffs: RefineCoeffs) -> RefinedRecord {
    let table = tables.get(record.department);
    let (mai, flag) = match record.weighting_pair() {
        None => (None, Some(RefineFlag::MissingWeightings)),
        Some((e, c)) => match categorize(e, c, table) {
            Ok(m) => (Some(m), None),
            Err(_) => (None, Some(RefineFlag::UnknownRatioClass)),
        },
    };
    let (rmm_value, flag) = match (record.module_mark, mai) {
        (None, _) => (None, flag.or(Some(RefineFlag::MissingMark))),
        (Some(mm), Some(m)) => (Some(rmm(mm, m, coeffs)), flag),
        (Some(mm), None) => (Some(mm), flag),
    };
    RefinedRecord { record: record.clone(), mai, rmm: rmm_value, flag }
}

/// Refines every record in order. Records whose ratio cannot be categorized
/// keep their module mark and carry a flag.
pub fn refine_all(records: &[TranscriptRecord], tables: &ClassTables, coeffs: RefineCoeffs) -> Vec<RefinedRecord> {
    records.par_iter().map(|r| refine_one(r, tables, coeffs)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GroupLabel {
    Method(AssessmentMethod),
    Unlabeled,
    Total,
}

impl fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupLabel::Method(m) => f.write_str(m.as_str()),
            GroupLabel::Unlabeled => f.write_str("Unlabeled"),
            GroupLabel::Total => f.write_str("Total"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub label: GroupLabel,
    pub module_count: usize,
    pub mean_mm: f64,
    pub mean_rmm: f64,
}

/// Per-method mean module mark and refined mark, with a Total row last.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementSummary {
    pub groups: Vec<SummaryRow>,
}

impl RefinementSummary {
    pub fn total(&self) -> &SummaryRow {
        self.groups.last().expect("summary always has a total row")
    }

    pub fn group(&self, label: GroupLabel) -> Option<&SummaryRow> {
        self.groups.iter().find(|g| g.label == label)
    }
}

/// Summarizes records that carry both a module mark and a refined mark.
pub fn summarize_refinement(records: &[RefinedRecord]) -> Result<RefinementSummary> {
    let labels = AssessmentMethod::ALL.iter().map(|&m| GroupLabel::Method(m)).chain(std::iter::once(GroupLabel::Unlabeled));
    let mut sums: Vec<(GroupLabel, usize, f64, f64)> = labels.map(|l| (l, 0, 0.0, 0.0)).collect();
    for r in records {
        let (Some(mm), Some(rmm)) = (r.record.module_mark, r.rmm) else {
            continue;
        };
        let slot = match r.record.assessment_method {
            Some(m) => AssessmentMethod::ALL.iter().position(|&x| x == m).unwrap(),
            None => AssessmentMethod::ALL.len(),
        };
        let s = &mut sums[slot];
        s.1 += 1;
        s.2 += mm;
        s.3 += rmm;
    }
    let n: usize = sums.iter().map(|s| s.1).sum();
    if n == 0 {
        return Err(Error::NoRecords);
    }
    let total_mm: f64 = sums.iter().map(|s| s.2).sum();
    let total_rmm: f64 = sums.iter().map(|s| s.3).sum();
    let mut groups: Vec<SummaryRow> = sums
        .into_iter()
        .filter(|s| s.1 > 0)
        .map(|(label, count, mm, rmm)| SummaryRow {
            label,
            module_count: count,
            mean_mm: mm / count as f64,
            mean_rmm: rmm / count as f64,
        })
        .collect();
    groups.push(SummaryRow {
        label: GroupLabel::Total,
        module_count: n,
        mean_mm: total_mm / n as f64,
        mean_rmm: total_rmm / n as f64,
    });
    Ok(RefinementSummary { groups })
}
