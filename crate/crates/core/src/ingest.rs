//! Reading and writing transcript tables.
//!
//! Files are comma-separated with one header row. Header names are matched
//! case-insensitively; blank cells are missing values. The department is
//! supplied per file, not per row.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AssessmentMethod, Department, RefineFlag, RefinedRecord, TranscriptRecord};

/// Column tokens of the transcript format, in output order.
pub const COLUMNS: [&str; 10] = [
    "regno",
    "module_code",
    "program_code",
    "module_mark",
    "exam_mark",
    "cswk_mark",
    "exam_weighting",
    "cswk_weighting",
    "assessment_method",
    "year_of_study",
];

/// Extra columns carried by refined tables.
pub const REFINED_COLUMNS: [&str; 3] = ["mai", "rmm", "flag"];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rows_accepted: usize,
    pub rows_rejected: usize,
    pub rejects: Vec<(u64, String)>,
}

impl IngestReport {
    fn reject(&mut self, line: u64, reason: String) {
        self.rows_rejected += 1;
        self.rejects.push((line, reason));
    }
}

struct Layout {
    index: [Option<usize>; COLUMNS.len()],
    refined: [Option<usize>; REFINED_COLUMNS.len()],
}

impl Layout {
    fn from_headers(headers: &csv::StringRecord) -> Result<Self> {
        let find = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
        let mut index = [None; COLUMNS.len()];
        for (slot, name) in index.iter_mut().zip(COLUMNS) {
            *slot = find(name);
        }
        let mut refined = [None; REFINED_COLUMNS.len()];
        for (slot, name) in refined.iter_mut().zip(REFINED_COLUMNS) {
            *slot = find(name);
        }
        if index[0].is_none() {
            return Err(Error::MissingColumn("regno"));
        }
        if index[1].is_none() {
            return Err(Error::MissingColumn("module_code"));
        }
        Ok(Layout { index, refined })
    }

    fn cell<'r>(&self, row: &'r csv::StringRecord, col: usize) -> &'r str {
        self.index[col].and_then(|i| row.get(i)).map(str::trim).unwrap_or("")
    }

    fn refined_cell<'r>(&self, row: &'r csv::StringRecord, col: usize) -> &'r str {
        self.refined[col].and_then(|i| row.get(i)).map(str::trim).unwrap_or("")
    }
}

fn parse_mark(cell: &str, name: &str) -> std::result::Result<Option<f64>, String> {
    if cell.is_empty() {
        return Ok(None);
    }
    let v: f64 = cell.parse().map_err(|_| format!("non-numeric {name}"))?;
    if !v.is_finite() {
        return Err(format!("non-numeric {name}"));
    }
    if !(0.0..=100.0).contains(&v) {
        return Err(format!("{name} outside [0, 100]"));
    }
    Ok(Some(v))
}

fn parse_weighting(cell: &str, name: &str) -> std::result::Result<Option<u8>, String> {
    if cell.is_empty() {
        return Ok(None);
    }
    let v: f64 = cell.parse().map_err(|_| format!("non-numeric {name}"))?;
    if v.fract() != 0.0 || !(0.0..=100.0).contains(&v) {
        return Err(format!("{name} is not an integer in [0, 100]"));
    }
    Ok(Some(v as u8))
}

fn parse_row(layout: &Layout, row: &csv::StringRecord, department: Department) -> std::result::Result<TranscriptRecord, String> {
    let regno = layout.cell(row, 0);
    if regno.is_empty() {
        return Err("empty regno".to_string());
    }
    let module_code = layout.cell(row, 1);
    if module_code.is_empty() {
        return Err("empty module_code".to_string());
    }
    let method_cell = layout.cell(row, 8);
    let assessment_method = if method_cell.is_empty() {
        None
    } else {
        Some(AssessmentMethod::parse(method_cell).ok_or_else(|| format!("unknown assessment_method `{method_cell}`"))?)
    };
    let year_cell = layout.cell(row, 9);
    let year_of_study = if year_cell.is_empty() {
        1
    } else {
        match year_cell.parse::<u8>() {
            Ok(y) if y >= 1 => y,
            _ => return Err("year_of_study is not an integer >= 1".to_string()),
        }
    };
    Ok(TranscriptRecord {
        regno: regno.to_string(),
        module_code: module_code.to_string(),
        program_code: layout.cell(row, 2).to_string(),
        department,
        module_mark: parse_mark(layout.cell(row, 3), "module_mark")?,
        exam_mark: parse_mark(layout.cell(row, 4), "exam_mark")?,
        cswk_mark: parse_mark(layout.cell(row, 5), "cswk_mark")?,
        exam_weighting: parse_weighting(layout.cell(row, 6), "exam_weighting")?,
        cswk_weighting: parse_weighting(layout.cell(row, 7), "cswk_weighting")?,
        assessment_method,
        year_of_study,
    })
}

fn parse_refined_row(
    layout: &Layout,
    row: &csv::StringRecord,
    department: Department,
) -> std::result::Result<RefinedRecord, String> {
    let record = parse_row(layout, row, department)?;
    let mai_cell = layout.refined_cell(row, 0);
    let mai = if mai_cell.is_empty() { None } else { Some(mai_cell.parse::<u32>().map_err(|_| "non-integer mai".to_string())?) };
    let rmm = parse_mark(layout.refined_cell(row, 1), "rmm")?;
    let flag_cell = layout.refined_cell(row, 2);
    let flag = if flag_cell.is_empty() {
        None
    } else {
        Some(RefineFlag::parse(flag_cell).ok_or_else(|| format!("unknown flag `{flag_cell}`"))?)
    };
    Ok(RefinedRecord { record, mai, rmm, flag })
}

fn read_rows<R: Read, T>(
    source: R,
    parse: impl Fn(&Layout, &csv::StringRecord) -> std::result::Result<T, String>,
    require_refined: bool,
) -> Result<(Vec<T>, IngestReport)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(source);
    let headers = reader.headers()?.clone();
    let layout = Layout::from_headers(&headers)?;
    if require_refined {
        if layout.refined[0].is_none() {
            return Err(Error::MissingColumn("mai"));
        }
        if layout.refined[1].is_none() {
            return Err(Error::MissingColumn("rmm"));
        }
    }

    let mut out = Vec::new();
    let mut report = IngestReport::default();
    let mut row = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {
                report.rows_read += 1;
                let line = row.position().map_or(0, |p| p.line());
                if row.len() != headers.len() {
                    report.reject(line, format!("expected {} fields, found {}", headers.len(), row.len()));
                    continue;
                }
                match parse(&layout, &row) {
                    Ok(rec) => {
                        report.rows_accepted += 1;
                        out.push(rec);
                    }
                    Err(reason) => report.reject(line, reason),
                }
            }
            Err(e) => {
                if let csv::ErrorKind::Io(_) = e.kind() {
                    return Err(e.into());
                }
                report.rows_read += 1;
                let line = e.position().map_or(0, |p| p.line());
                report.reject(line, e.to_string());
            }
        }
    }
    Ok((out, report))
}

/// Parses a transcript table for one department.
pub fn parse_transcripts<R: Read>(source: R, department: Department) -> Result<(Vec<TranscriptRecord>, IngestReport)> {
    read_rows(source, |layout, row| parse_row(layout, row, department), false)
}

/// Parses a refined table (transcript columns plus `mai`, `rmm`, `flag`).
pub fn parse_refined<R: Read>(source: R, department: Department) -> Result<(Vec<RefinedRecord>, IngestReport)> {
    read_rows(source, |layout, row| parse_refined_row(layout, row, department), true)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn record_fields(r: &TranscriptRecord) -> [String; COLUMNS.len()] {
    [
        r.regno.clone(),
        r.module_code.clone(),
        r.program_code.clone(),
        opt(r.module_mark),
        opt(r.exam_mark),
        opt(r.cswk_mark),
        opt(r.exam_weighting),
        opt(r.cswk_weighting),
        opt(r.assessment_method.map(AssessmentMethod::as_str)),
        r.year_of_study.to_string(),
    ]
}

/// Writes records in the transcript format. Marks use the shortest
/// representation that parses back to the same value.
pub fn write_transcripts<W: Write>(records: &[TranscriptRecord], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record(record_fields(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_refined<W: Write>(records: &[RefinedRecord], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(COLUMNS.iter().chain(REFINED_COLUMNS.iter()))?;
    for r in records {
        let base = record_fields(&r.record);
        let extra = [opt(r.mai), opt(r.rmm), opt(r.flag.map(RefineFlag::as_str))];
        w.write_record(base.iter().chain(extra.iter()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "regno,module_code,program_code,module_mark,exam_mark,cswk_mark,exam_weighting,cswk_weighting,assessment_method,year_of_study\n";

    #[test]
    fn clean_rows_accepted() {
        let text = format!(
            "{HEADER}S1,CS101,P1,60,60,,100,0,Exam,1\nS1,CS102,P1,70,,70,0,100,Coursework,1\nS2,CS103,P1,55.5,50,60,45,55,Both,2\n"
        );
        let (recs, rep) = parse_transcripts(text.as_bytes(), Department::CS).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(rep, IngestReport { rows_read: 3, rows_accepted: 3, rows_rejected: 0, rejects: vec![] });
        assert_eq!(recs[2].module_mark, Some(55.5));
        assert_eq!(recs[2].assessment_method, Some(AssessmentMethod::Both));
        assert_eq!(recs[2].year_of_study, 2);
        assert_eq!(recs[1].exam_mark, None);
    }

    #[test]
    fn non_numeric_mark_rejects_row() {
        let text = format!("{HEADER}S1,CS101,P1,abc,,,100,0,Exam,1\nS1,CS102,P1,50,,,100,0,Exam,1\n");
        let (recs, rep) = parse_transcripts(text.as_bytes(), Department::CS).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(rep.rows_read, 2);
        assert_eq!(rep.rows_rejected, 1);
        assert_eq!(rep.rejects[0], (2, "non-numeric module_mark".to_string()));
    }

    #[test]
    fn empty_weighting_is_missing() {
        let text = format!("{HEADER}S1,CS101,P1,60,,,,100,,1\n");
        let (recs, _) = parse_transcripts(text.as_bytes(), Department::CS).unwrap();
        assert_eq!(recs[0].exam_weighting, None);
        assert_eq!(recs[0].cswk_weighting, Some(100));
        assert_eq!(recs[0].assessment_method, None);
    }

    #[test]
    fn out_of_range_mark_rejected() {
        let text = format!("{HEADER}S1,CS101,P1,101,,,100,0,Exam,1\n");
        let (recs, rep) = parse_transcripts(text.as_bytes(), Department::CS).unwrap();
        assert!(recs.is_empty());
        assert_eq!(rep.rejects[0].1, "module_mark outside [0, 100]");
    }

    #[test]
    fn headers_case_insensitive_and_reordered() {
        let text = "Module_Code,REGNO,Module_Mark\nCS1,S9,42\n";
        let (recs, _) = parse_transcripts(text.as_bytes(), Department::Math).unwrap();
        assert_eq!(recs[0].regno, "S9");
        assert_eq!(recs[0].module_code, "CS1");
        assert_eq!(recs[0].module_mark, Some(42.0));
        assert_eq!(recs[0].department, Department::Math);
    }

    #[test]
    fn missing_mandatory_column_is_fatal() {
        let err = parse_transcripts("module_code,module_mark\nA,1\n".as_bytes(), Department::CS).unwrap_err();
        assert!(matches!(err, Error::MissingColumn("regno")));
    }

    #[test]
    fn ragged_row_rejected() {
        let text = format!("{HEADER}S1,CS101\n");
        let (_, rep) = parse_transcripts(text.as_bytes(), Department::CS).unwrap();
        assert_eq!(rep.rows_rejected, 1);
    }

    #[test]
    fn refined_roundtrip() {
        let mut r = TranscriptRecord::new("S1", "CS1", Department::CS);
        r.module_mark = Some(60.3);
        let recs = vec![
            RefinedRecord { record: r.clone(), mai: Some(11), rmm: Some(53.456), flag: None },
            RefinedRecord { record: r, mai: None, rmm: Some(60.3), flag: Some(RefineFlag::UnknownRatioClass) },
        ];
        let mut buf = Vec::new();
        write_refined(&recs, &mut buf).unwrap();
        let (back, rep) = parse_refined(buf.as_slice(), Department::CS).unwrap();
        assert_eq!(rep.rows_rejected, 0);
        assert_eq!(back, recs);
    }
}
