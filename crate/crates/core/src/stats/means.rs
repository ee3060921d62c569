use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::ttest::{paired_ttest, TTestResult};
use crate::model::{AssessmentMethod, Department, TranscriptRecord};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMeansRow {
    pub department: Department,
    /// Distinct students contributing a mark.
    pub student_count: usize,
    /// Mean module mark by Exam, Coursework, Both; `None` for empty cells.
    pub means: [Option<f64>; 3],
    pub counts: [usize; 3],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GroupMeansTable {
    pub rows: Vec<GroupMeansRow>,
}

impl GroupMeansTable {
    pub fn row(&self, department: Department) -> Option<&GroupMeansRow> {
        self.rows.iter().find(|r| r.department == department)
    }
}

fn slot(m: AssessmentMethod) -> usize {
    match m {
        AssessmentMethod::Exam => 0,
        AssessmentMethod::Coursework => 1,
        AssessmentMethod::Both => 2,
    }
}

/// Mean module mark per department and assessment method. Records lacking a
/// mark or a method are skipped.
pub fn group_means(records: &[TranscriptRecord]) -> GroupMeansTable {
    #[derive(Default)]
    struct Acc<'a> {
        students: BTreeSet<&'a str>,
        sums: [f64; 3],
        counts: [usize; 3],
    }
    let mut acc: BTreeMap<Department, Acc> = BTreeMap::new();
    for r in records {
        let (Some(mm), Some(m)) = (r.module_mark, r.assessment_method) else {
            continue;
        };
        let a = acc.entry(r.department).or_default();
        a.students.insert(&r.regno);
        a.sums[slot(m)] += mm;
        a.counts[slot(m)] += 1;
    }
    let rows = acc
        .into_iter()
        .map(|(department, a)| {
            let means = std::array::from_fn(|i| (a.counts[i] > 0).then(|| a.sums[i] / a.counts[i] as f64));
            GroupMeansRow { department, student_count: a.students.len(), means, counts: a.counts }
        })
        .collect();
    GroupMeansTable { rows }
}

/// A published per-department row: student count and mean module mark for
/// exam, coursework and mixed assessment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub department: Department,
    pub students: u32,
    pub exam: f64,
    pub coursework: f64,
    pub mixed: f64,
}

const fn row(department: Department, students: u32, exam: f64, coursework: f64, mixed: f64) -> ReferenceRow {
    ReferenceRow { department, students, exam, coursework, mixed }
}

const TABLE_ONE: [ReferenceRow; 6] = [
    row(Department::Business, 54960, 59.77, 60.83, 60.01),
    row(Department::CivilEng, 34892, 58.78, 63.74, 60.70),
    row(Department::CS, 19800, 58.18, 64.40, 58.87),
    row(Department::ECSEng, 13740, 59.55, 63.26, 57.00),
    row(Department::Math, 24152, 61.59, 66.00, 61.17),
    row(Department::MechEng, 31385, 58.80, 64.26, 60.24),
];

/// Built-in department mark averages by assessment method.
pub fn table_one() -> &'static [ReferenceRow] {
    &TABLE_ONE
}

/// The three paired comparisons over a per-department means table:
/// exam vs coursework, coursework vs mixed, exam vs mixed.
pub fn table_one_ttests(rows: &[ReferenceRow]) -> crate::Result<Vec<(&'static str, TTestResult)>> {
    let col = |f: fn(&ReferenceRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let (ex, cw, mx) = (col(|r| r.exam), col(|r| r.coursework), col(|r| r.mixed));
    Ok(vec![
        ("Exam vs Coursework", paired_ttest(&ex, &cw)?),
        ("Coursework vs Mixed", paired_ttest(&cw, &mx)?),
        ("Exam vs Mixed", paired_ttest(&ex, &mx)?),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_record() {
        let mut r = TranscriptRecord::new("S1", "M1", Department::CS);
        r.module_mark = Some(70.0);
        r.assessment_method = Some(AssessmentMethod::Exam);
        let t = group_means(&[r]);
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].means, [Some(70.0), None, None]);
        assert_eq!(t.rows[0].student_count, 1);
    }

    #[test]
    fn empty_input() {
        assert!(group_means(&[]).rows.is_empty());
    }

    #[test]
    fn reference_ttests() {
        let r = table_one_ttests(table_one()).unwrap();
        assert!((r[0].1.t + 5.83).abs() < 0.01);
        assert!((r[0].1.p - 0.002).abs() < 0.001);
        assert!((r[1].1.p - 0.004).abs() < 0.001);
        assert!((r[2].1.p - 0.749).abs() < 0.005);
    }
}
