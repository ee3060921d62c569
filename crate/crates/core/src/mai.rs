//! Ratio class tables and the Module Assessment Index.
//!
//! Each department uses a fixed set of exam:coursework weighting ratios. The
//! index of a module is the rank of its ratio in the department's table,
//! sorted by coursework weighting: 0 is a pure exam module and the largest
//! index is a pure coursework module.

use std::collections::BTreeMap;
use std::io::Read;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Department, RefinedRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassTable {
    department: Department,
    /// (exam_weighting, cswk_weighting), ascending by coursework weighting.
    classes: Vec<(u8, u8)>,
}

impl ClassTable {
    /// Builds a table from (exam, coursework) pairs in any order.
    pub fn new(department: Department, pairs: impl IntoIterator<Item = (u8, u8)>) -> Result<Self> {
        let mut classes: Vec<(u8, u8)> = pairs.into_iter().collect();
        for &(e, c) in &classes {
            if u16::from(e) + u16::from(c) != 100 {
                return Err(Error::InvalidClassTable(format!("{department}: ratio {e}:{c} does not sum to 100")));
            }
        }
        classes.sort_by_key(|&(_, c)| c);
        if classes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidClassTable(format!("{department}: duplicate ratio class")));
        }
        match (classes.first(), classes.last()) {
            (Some(&(100, 0)), Some(&(0, 100))) => {}
            _ => return Err(Error::InvalidClassTable(format!("{department}: table must contain both 100:0 and 0:100"))),
        }
        Ok(ClassTable { department, classes })
    }

    pub fn department(&self) -> Department {
        self.department
    }

    pub fn classes(&self) -> &[(u8, u8)] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Largest index in this table (the pure coursework class).
    pub fn max_mai(&self) -> u32 {
        (self.classes.len() - 1) as u32
    }
}

// Coursework weightings ticked per department, exam share is the complement.
const BUSINESS: &[u8] = &[0, 10, 20, 25, 30, 40, 50, 60, 65, 100];
const CS: &[u8] = &[0, 10, 20, 25, 30, 40, 50, 55, 60, 65, 70, 100];
const CIVIL: &[u8] = &[0, 15, 20, 25, 30, 40, 45, 50, 60, 75, 100];
const ECSE: &[u8] = &[0, 10, 15, 20, 25, 30, 35, 40, 50, 60, 66, 100];
const MATH: &[u8] = &[0, 10, 20, 25, 30, 40, 50, 70, 100];
const MECH: &[u8] = &[0, 10, 20, 25, 30, 40, 50, 70, 75, 100];

/// Built-in ratio class table of a department.
pub fn class_table(department: Department) -> ClassTable {
    let cww = match department {
        Department::Business => BUSINESS,
        Department::CivilEng => CIVIL,
        Department::CS => CS,
        Department::ECSEng => ECSE,
        Department::Math => MATH,
        Department::MechEng => MECH,
    };
    ClassTable::new(department, cww.iter().map(|&c| (100 - c, c))).expect("built-in table is well formed")
}

/// Maps an exact weighting pair to its index in `table`.
///
/// Index 0 is the 100:0 (pure exam) class; `table.max_mai()` is 0:100.
/// Pairs not present in the table are an error; there is no snapping to
/// the nearest class.
pub fn categorize(exam_weighting: u8, cswk_weighting: u8, table: &ClassTable) -> Result<u32> {
    if u16::from(exam_weighting) + u16::from(cswk_weighting) != 100 {
        return Err(Error::InconsistentWeightings { exam: exam_weighting, coursework: cswk_weighting });
    }
    table
        .classes
        .binary_search_by_key(&cswk_weighting, |&(_, c)| c)
        .map(|i| i as u32)
        .map_err(|_| Error::UnknownRatioClass { exam: exam_weighting, coursework: cswk_weighting })
}

/// Mean index over the records that have one.
pub fn average_mai(records: &[RefinedRecord]) -> Result<f64> {
    let values: Vec<u32> = records.iter().filter_map(|r| r.mai).collect();
    if values.is_empty() {
        return Err(Error::NoRecords);
    }
    Ok(values.iter().map(|&v| f64::from(v)).sum::<f64>() / values.len() as f64)
}

/// Class tables for every department, built-in unless overridden.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTables {
    tables: BTreeMap<Department, ClassTable>,
}

impl Default for ClassTables {
    fn default() -> Self {
        Self::builtin()
    }
}

impl ClassTables {
    pub fn builtin() -> Self {
        ClassTables { tables: Department::ALL.iter().map(|&d| (d, class_table(d))).collect() }
    }

    pub fn get(&self, department: Department) -> &ClassTable {
        &self.tables[&department]
    }

    pub fn insert(&mut self, table: ClassTable) {
        self.tables.insert(table.department, table);
    }

    /// Replaces the tables of every department named in a class file.
    ///
    /// The file is comma-separated with header columns `department`,
    /// `exam_weighting` and `cswk_weighting`, one ratio class per row.
    pub fn load_overrides<R: Read>(&mut self, source: R) -> Result<()> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
        let headers = reader.headers()?.clone();
        let col =
            |name: &'static str| headers.iter().position(|h| h.eq_ignore_ascii_case(name)).ok_or(Error::MissingColumn(name));
        let (d_col, e_col, c_col) = (col("department")?, col("exam_weighting")?, col("cswk_weighting")?);

        let mut pairs: BTreeMap<Department, Vec<(u8, u8)>> = BTreeMap::new();
        for row in reader.records() {
            let row = row?;
            let field = |i: usize| row.get(i).unwrap_or("");
            let dept: Department = field(d_col).parse()?;
            let parse_w = |s: &str| s.parse::<u8>().map_err(|_| Error::InvalidClassTable(format!("bad weighting `{s}`")));
            pairs.entry(dept).or_default().push((parse_w(field(e_col))?, parse_w(field(c_col))?));
        }
        for (dept, p) in pairs {
            self.insert(ClassTable::new(dept, p)?);
        }
        Ok(())
    }
}
