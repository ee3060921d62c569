//! Domain types shared by every pipeline stage.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Department {
    Business,
    CivilEng,
    CS,
    ECSEng,
    Math,
    MechEng,
}

impl Department {
    pub const ALL: [Department; 6] =
        [Department::Business, Department::CivilEng, Department::CS, Department::ECSEng, Department::Math, Department::MechEng];

    pub fn as_str(self) -> &'static str {
        match self {
            Department::Business => "Business",
            Department::CivilEng => "CivilEng",
            Department::CS => "CS",
            Department::ECSEng => "ECSEng",
            Department::Math => "Math",
            Department::MechEng => "MechEng",
        }
    }
}

impl fmt::Display for Department {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Department {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match key.as_str() {
            "business" => Ok(Department::Business),
            "civileng" | "ceng" | "civilengineering" => Ok(Department::CivilEng),
            "cs" | "computerscience" => Ok(Department::CS),
            "ecseng" | "electricalandcomputersystemsengineering" => Ok(Department::ECSEng),
            "math" | "maths" | "mathematics" => Ok(Department::Math),
            "mecheng" | "meng" | "mechanicalengineering" => Ok(Department::MechEng),
            _ => Err(Error::UnknownDepartment(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AssessmentMethod {
    Exam,
    Coursework,
    Both,
}

impl AssessmentMethod {
    pub const ALL: [AssessmentMethod; 3] = [AssessmentMethod::Exam, AssessmentMethod::Coursework, AssessmentMethod::Both];

    pub fn as_str(self) -> &'static str {
        match self {
            AssessmentMethod::Exam => "Exam",
            AssessmentMethod::Coursework => "Coursework",
            AssessmentMethod::Both => "Both",
        }
    }

    /// Parses the exact cell tokens used in transcript files, ignoring case.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exam" => Some(AssessmentMethod::Exam),
            "coursework" => Some(AssessmentMethod::Coursework),
            "both" => Some(AssessmentMethod::Both),
            _ => None,
        }
    }
}

impl fmt::Display for AssessmentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One student-module row of a department transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub regno: String,
    pub module_code: String,
    pub program_code: String,
    pub department: Department,
    pub module_mark: Option<f64>,
    pub exam_mark: Option<f64>,
    pub cswk_mark: Option<f64>,
    pub exam_weighting: Option<u8>,
    pub cswk_weighting: Option<u8>,
    pub assessment_method: Option<AssessmentMethod>,
    pub year_of_study: u8,
}

impl TranscriptRecord {
    /// A record with identifiers set and every optional field missing.
    pub fn new(regno: &str, module_code: &str, department: Department) -> Self {
        TranscriptRecord {
            regno: regno.to_string(),
            module_code: module_code.to_string(),
            program_code: String::new(),
            department,
            module_mark: None,
            exam_mark: None,
            cswk_mark: None,
            exam_weighting: None,
            cswk_weighting: None,
            assessment_method: None,
            year_of_study: 1,
        }
    }

    /// Exam weighting, falling back to the complement of the coursework
    /// weighting when only that one is recorded.
    pub fn effective_exam_weighting(&self) -> Option<u8> {
        match (self.exam_weighting, self.cswk_weighting) {
            (Some(e), _) => Some(e),
            (None, Some(c)) if c <= 100 => Some(100 - c),
            _ => None,
        }
    }

    /// Both weightings, completing a single recorded one to sum to 100.
    pub fn weighting_pair(&self) -> Option<(u8, u8)> {
        match (self.exam_weighting, self.cswk_weighting) {
            (Some(e), Some(c)) => Some((e, c)),
            (Some(e), None) if e <= 100 => Some((e, 100 - e)),
            (None, Some(c)) if c <= 100 => Some((100 - c, c)),
            _ => None,
        }
    }
}

/// Why a refined record could not be fully refined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RefineFlag {
    UnknownRatioClass,
    MissingWeightings,
    MissingMark,
}

impl RefineFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            RefineFlag::UnknownRatioClass => "unknown_ratio_class",
            RefineFlag::MissingWeightings => "missing_weightings",
            RefineFlag::MissingMark => "missing_mark",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "unknown_ratio_class" => Some(RefineFlag::UnknownRatioClass),
            "missing_weightings" => Some(RefineFlag::MissingWeightings),
            "missing_mark" => Some(RefineFlag::MissingMark),
            _ => None,
        }
    }
}

/// A transcript record carrying its assessment index and refined mark.
///
/// `mai` is `None` when the record's ratio could not be categorized; in that
/// case `rmm` equals the module mark and `flag` says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedRecord {
    pub record: TranscriptRecord,
    pub mai: Option<u32>,
    pub rmm: Option<f64>,
    pub flag: Option<RefineFlag>,
}

/// Degree-class band of a yearly average, ordered from worst to best.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MarkClass {
    Fail,
    Pass,
    Third,
    LowerSecond,
    UpperSecond,
    First,
}

impl MarkClass {
    pub const COUNT: usize = 6;

    pub const ALL: [MarkClass; MarkClass::COUNT] =
        [MarkClass::Fail, MarkClass::Pass, MarkClass::Third, MarkClass::LowerSecond, MarkClass::UpperSecond, MarkClass::First];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        MarkClass::ALL.get(i).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            MarkClass::Fail => "Fail",
            MarkClass::Pass => "Pass",
            MarkClass::Third => "Third",
            MarkClass::LowerSecond => "Lower second",
            MarkClass::UpperSecond => "Upper second",
            MarkClass::First => "First",
        }
    }
}

impl fmt::Display for MarkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rule {
    EmptyIdentifier,
    NonAlphanumericCode,
    MarkOutOfRange,
    WeightingOutOfRange,
    WeightingSum,
    MethodMismatch,
    YearOfStudy,
}

impl Rule {
    pub fn describe(self) -> &'static str {
        match self {
            Rule::EmptyIdentifier => "identifier is empty",
            Rule::NonAlphanumericCode => "module code is not alphanumeric",
            Rule::MarkOutOfRange => "mark outside [0, 100]",
            Rule::WeightingOutOfRange => "weighting outside [0, 100]",
            Rule::WeightingSum => "weighting sum ≠ 100",
            Rule::MethodMismatch => "method/weighting mismatch",
            Rule::YearOfStudy => "year of study < 1",
        }
    }
}

/// A broken invariant on one field of a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: &'static str,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule.describe())
    }
}

/// Checks every record invariant, returning one violation per broken rule.
pub fn validate(record: &TranscriptRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |field, rule| out.push(Violation { field, rule });

    if record.regno.trim().is_empty() {
        push("regno", Rule::EmptyIdentifier);
    }
    if record.module_code.trim().is_empty() {
        push("module_code", Rule::EmptyIdentifier);
    } else if !record.module_code.chars().all(|c| c.is_ascii_alphanumeric()) {
        push("module_code", Rule::NonAlphanumericCode);
    }

    for (field, mark) in [("module_mark", record.module_mark), ("exam_mark", record.exam_mark), ("cswk_mark", record.cswk_mark)] {
        if let Some(m) = mark {
            if !(0.0..=100.0).contains(&m) {
                push(field, Rule::MarkOutOfRange);
            }
        }
    }

    let mut weights_in_range = true;
    for (field, w) in [("exam_weighting", record.exam_weighting), ("cswk_weighting", record.cswk_weighting)] {
        if matches!(w, Some(w) if w > 100) {
            push(field, Rule::WeightingOutOfRange);
            weights_in_range = false;
        }
    }

    if let (Some(e), Some(c)) = (record.exam_weighting, record.cswk_weighting) {
        if u16::from(e) + u16::from(c) != 100 {
            push("exam_weighting", Rule::WeightingSum);
        }
    }

    if weights_in_range {
        if let (Some(method), Some(exw)) = (record.assessment_method, record.effective_exam_weighting()) {
            let ok = match method {
                AssessmentMethod::Exam => exw == 100,
                AssessmentMethod::Coursework => exw == 0,
                AssessmentMethod::Both => exw != 0 && exw != 100,
            };
            if !ok {
                push("assessment_method", Rule::MethodMismatch);
            }
        }
    }

    if record.year_of_study < 1 {
        push("year_of_study", Rule::YearOfStudy);
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weighted(exw: Option<u8>, cww: Option<u8>, method: Option<AssessmentMethod>) -> TranscriptRecord {
        let mut r = TranscriptRecord::new("S1", "CS101", Department::CS);
        r.module_mark = Some(55.0);
        r.exam_weighting = exw;
        r.cswk_weighting = cww;
        r.assessment_method = method;
        r
    }

    #[test]
    fn complementary_weights_are_valid() {
        assert!(validate(&weighted(Some(60), Some(40), None)).is_empty());
    }

    #[test]
    fn weight_sum_violation() {
        let v = validate(&weighted(Some(60), Some(60), None));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::WeightingSum);
        assert_eq!(v[0].rule.describe(), "weighting sum ≠ 100");
    }

    #[test]
    fn exam_method_with_partial_exam_weighting() {
        let v = validate(&weighted(Some(70), None, Some(AssessmentMethod::Exam)));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::MethodMismatch);
        assert_eq!(v[0].field, "assessment_method");
    }

    #[test]
    fn method_checks_follow_weightings() {
        assert!(validate(&weighted(Some(0), Some(100), Some(AssessmentMethod::Coursework))).is_empty());
        assert!(validate(&weighted(Some(50), Some(50), Some(AssessmentMethod::Both))).is_empty());
        assert_eq!(validate(&weighted(Some(100), Some(0), Some(AssessmentMethod::Both))).len(), 1);
        // coursework-only weighting implies the exam share
        assert_eq!(validate(&weighted(None, Some(100), Some(AssessmentMethod::Exam))).len(), 1);
    }

    #[test]
    fn marks_and_years_checked() {
        let mut r = weighted(None, None, None);
        r.module_mark = Some(100.5);
        r.exam_mark = Some(-1.0);
        r.year_of_study = 0;
        let rules: Vec<_> = validate(&r).into_iter().map(|v| (v.field, v.rule)).collect();
        assert_eq!(
            rules,
            vec![
                ("module_mark", Rule::MarkOutOfRange),
                ("exam_mark", Rule::MarkOutOfRange),
                ("year_of_study", Rule::YearOfStudy),
            ]
        );
    }

    #[test]
    fn department_names_parse() {
        assert_eq!("cs".parse::<Department>().unwrap(), Department::CS);
        assert_eq!("Civil Engineering".parse::<Department>().unwrap(), Department::CivilEng);
        assert_eq!("MEng".parse::<Department>().unwrap(), Department::MechEng);
        assert!("Physics".parse::<Department>().is_err());
        for d in Department::ALL {
            assert_eq!(d.as_str().parse::<Department>().unwrap(), d);
        }
    }

    #[test]
    fn mark_classes_are_ordered() {
        for w in MarkClass::ALL.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert_eq!(MarkClass::from_index(5), Some(MarkClass::First));
    }
}
