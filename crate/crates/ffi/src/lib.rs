//! C interface to the markrefine pipeline.
//!
//! Every fallible function returns an [`MrStatus`]; on failure a message is
//! kept per thread and can be read with [`mr_last_error`]. Handles are opaque
//! and owned by the caller, who releases them with the matching `_free`
//! function. Strings returned to the caller are released with
//! [`mr_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use markrefine::cleanse::cleanse;
use markrefine::ingest::{parse_refined, parse_transcripts, write_refined, write_transcripts};
use markrefine::mai::ClassTables;
use markrefine::model::{AssessmentMethod, Department, RefineFlag, RefinedRecord, TranscriptRecord};
use markrefine::refine::{self, refine_all, summarize_refinement, RefineCoeffs};
use markrefine::stats::{fit_poly, paired_ttest, pearson};
use markrefine::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    /// Input data could not be parsed or failed validation.
    Data = 4,
    /// Too few or degenerate observations for a statistic.
    Numeric = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// Transcript records for one department.
pub struct MrRecords {
    department: Department,
    records: Vec<TranscriptRecord>,
}

/// Records with their assessment index and refined mark.
pub struct MrRefined {
    department: Department,
    records: Vec<RefinedRecord>,
}

/// Ratio-class tables for every department.
pub struct MrClassTables {
    tables: ClassTables,
}

/// One refined record as plain values. `mai` is -1 when no index was
/// assigned; `flag` is 0 for none, 1 unknown ratio class, 2 missing
/// weightings, 3 missing mark.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrRefinedRow {
    pub has_module_mark: bool,
    pub module_mark: f64,
    pub mai: i32,
    pub has_rmm: bool,
    pub rmm: f64,
    /// 0 exam, 1 coursework, 2 both, -1 unknown.
    pub assessment_method: i32,
    pub year_of_study: u8,
    pub flag: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MrCleanseCounts {
    pub methods_inferred: usize,
    pub records_dropped: usize,
    pub unresolved: usize,
    pub inconsistent: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MrSummary {
    pub module_count: usize,
    pub mean_mm: f64,
    pub mean_rmm: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MrTTest {
    pub t: f64,
    pub p: f64,
    pub df: u32,
    pub mean_diff: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MrFit {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub r_squared: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> MrStatus {
    match e {
        Error::TooFewObservations { .. }
        | Error::DegeneratePairs
        | Error::ZeroVariance
        | Error::ZeroVarianceResponse
        | Error::DegenerateDesign
        | Error::LengthMismatch(..) => MrStatus::Numeric,
        Error::MarkOutOfRange(_) => MrStatus::OutOfRange,
        Error::UnsupportedDegree(_) | Error::Config(_) | Error::UnknownDepartment(_) => MrStatus::InvalidArgument,
        _ => MrStatus::Data,
    }
}

fn fail(status: MrStatus, message: impl Into<String>) -> MrStatus {
    set_error(message);
    status
}

/// Runs `f`, turning errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), MrStatus>) -> MrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MrStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(MrStatus::Panic, "internal panic"),
    }
}

fn lib(e: Error) -> MrStatus {
    let status = status_of(&e);
    fail(status, e.to_string())
}

unsafe fn text<'a>(p: *const libc::c_char, what: &str) -> Result<&'a str, MrStatus> {
    if p.is_null() {
        return Err(fail(MrStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(MrStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn department(p: *const libc::c_char) -> Result<Department, MrStatus> {
    text(p, "department")?.parse().map_err(lib)
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], MrStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(MrStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, MrStatus> {
    p.as_mut().ok_or_else(|| fail(MrStatus::NullPointer, format!("{what} is null")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, MrStatus> {
    p.as_ref().ok_or_else(|| fail(MrStatus::NullPointer, format!("{what} is null")))
}

fn to_c_string(s: String) -> Result<*mut libc::c_char, MrStatus> {
    CString::new(s).map(CString::into_raw).map_err(|_| fail(MrStatus::Data, "output contains a NUL byte"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mr_version() -> *const libc::c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL after a
/// successful call. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn mr_last_error() -> *const libc::c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mr_string_free(s: *mut libc::c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses transcript CSV text. Rows that fail validation are skipped and
/// counted in `rows_rejected` (which may be NULL).
///
/// # Safety
/// `csv` and `dept` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_records_parse_csv(
    csv: *const libc::c_char,
    dept: *const libc::c_char,
    out_records: *mut *mut MrRecords,
    rows_rejected: *mut usize,
) -> MrStatus {
    guard(|| {
        let slot = out(out_records, "out_records")?;
        let department = department(dept)?;
        let (records, report) = parse_transcripts(text(csv, "csv")?.as_bytes(), department).map_err(lib)?;
        if let Some(r) = rows_rejected.as_mut() {
            *r = report.rows_rejected;
        }
        *slot = Box::into_raw(Box::new(MrRecords { department, records }));
        Ok(())
    })
}

/// # Safety
/// `records` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn mr_records_free(records: *mut MrRecords) {
    if !records.is_null() {
        drop(Box::from_raw(records));
    }
}

/// Number of records, 0 for NULL.
///
/// # Safety
/// `records` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mr_records_len(records: *const MrRecords) -> usize {
    records.as_ref().map_or(0, |r| r.records.len())
}

/// Fills missing assessment methods and drops records without a module
/// mark, in place. `counts` may be NULL.
///
/// # Safety
/// `records` must be a live handle not used concurrently.
#[no_mangle]
pub unsafe extern "C" fn mr_records_cleanse(records: *mut MrRecords, counts: *mut MrCleanseCounts) -> MrStatus {
    guard(|| {
        let r = out(records, "records")?;
        let (cleaned, report) = cleanse(std::mem::take(&mut r.records));
        r.records = cleaned;
        if let Some(c) = counts.as_mut() {
            *c = MrCleanseCounts {
                methods_inferred: report.methods_inferred,
                records_dropped: report.records_dropped,
                unresolved: report.unresolved,
                inconsistent: report.inconsistent.len(),
            };
        }
        Ok(())
    })
}

/// Serializes records as transcript CSV; free the result with
/// [`mr_string_free`].
///
/// # Safety
/// `records` must be a live handle; `out_csv` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_records_to_csv(records: *const MrRecords, out_csv: *mut *mut libc::c_char) -> MrStatus {
    guard(|| {
        let r = handle(records, "records")?;
        let slot = out(out_csv, "out_csv")?;
        let mut buf = Vec::new();
        write_transcripts(&r.records, &mut buf).map_err(lib)?;
        *slot = to_c_string(String::from_utf8(buf).map_err(|_| fail(MrStatus::Data, "non-UTF-8 output"))?)?;
        Ok(())
    })
}

/// Built-in class tables.
#[no_mangle]
pub extern "C" fn mr_class_tables_builtin() -> *mut MrClassTables {
    Box::into_raw(Box::new(MrClassTables { tables: ClassTables::builtin() }))
}

/// Replaces the tables of the departments listed in `csv` (columns
/// department, exam_weighting, cswk_weighting).
///
/// # Safety
/// `tables` must be a live handle; `csv` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mr_class_tables_load(tables: *mut MrClassTables, csv: *const libc::c_char) -> MrStatus {
    guard(|| {
        let t = out(tables, "tables")?;
        let source = text(csv, "csv")?;
        let mut updated = t.tables.clone();
        updated.load_overrides(source.as_bytes()).map_err(lib)?;
        t.tables = updated;
        Ok(())
    })
}

/// Number of ratio classes for a department, 0 on error.
///
/// # Safety
/// `tables` must be a live handle; `dept` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mr_class_tables_len(tables: *const MrClassTables, dept: *const libc::c_char) -> usize {
    let (Some(t), Ok(d)) = (tables.as_ref(), department(dept)) else { return 0 };
    t.tables.get(d).len()
}

/// # Safety
/// `tables` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn mr_class_tables_free(tables: *mut MrClassTables) {
    if !tables.is_null() {
        drop(Box::from_raw(tables));
    }
}

/// Assigns indices and refined marks. `tables` may be NULL for the built-in
/// tables.
///
/// # Safety
/// `records` must be a live handle, `tables` NULL or a live handle and
/// `out_refined` writable.
#[no_mangle]
pub unsafe extern "C" fn mr_refine(
    records: *const MrRecords,
    tables: *const MrClassTables,
    beta1: f64,
    beta2: f64,
    out_refined: *mut *mut MrRefined,
) -> MrStatus {
    guard(|| {
        let r = handle(records, "records")?;
        let slot = out(out_refined, "out_refined")?;
        if !beta1.is_finite() || !beta2.is_finite() {
            return Err(fail(MrStatus::InvalidArgument, "coefficients must be finite"));
        }
        let builtin;
        let tables = match tables.as_ref() {
            Some(t) => &t.tables,
            None => {
                builtin = ClassTables::builtin();
                &builtin
            }
        };
        let refined = refine_all(&r.records, tables, RefineCoeffs { beta1, beta2 });
        *slot = Box::into_raw(Box::new(MrRefined { department: r.department, records: refined }));
        Ok(())
    })
}

/// Parses a refined table previously written by [`mr_refined_to_csv`] or
/// the command-line tool.
///
/// # Safety
/// `csv` and `dept` must be NUL-terminated strings; `out_refined` writable.
#[no_mangle]
pub unsafe extern "C" fn mr_refined_parse_csv(
    csv: *const libc::c_char,
    dept: *const libc::c_char,
    out_refined: *mut *mut MrRefined,
) -> MrStatus {
    guard(|| {
        let slot = out(out_refined, "out_refined")?;
        let department = department(dept)?;
        let (records, _) = parse_refined(text(csv, "csv")?.as_bytes(), department).map_err(lib)?;
        *slot = Box::into_raw(Box::new(MrRefined { department, records }));
        Ok(())
    })
}

/// # Safety
/// `refined` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn mr_refined_free(refined: *mut MrRefined) {
    if !refined.is_null() {
        drop(Box::from_raw(refined));
    }
}

/// # Safety
/// `refined` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mr_refined_len(refined: *const MrRefined) -> usize {
    refined.as_ref().map_or(0, |r| r.records.len())
}

fn flag_code(flag: Option<RefineFlag>) -> i32 {
    match flag {
        None => 0,
        Some(RefineFlag::UnknownRatioClass) => 1,
        Some(RefineFlag::MissingWeightings) => 2,
        Some(RefineFlag::MissingMark) => 3,
    }
}

fn method_code(method: Option<AssessmentMethod>) -> i32 {
    match method {
        Some(AssessmentMethod::Exam) => 0,
        Some(AssessmentMethod::Coursework) => 1,
        Some(AssessmentMethod::Both) => 2,
        None => -1,
    }
}

/// Copies record `index` into `row`.
///
/// # Safety
/// `refined` must be a live handle; `row` writable.
#[no_mangle]
pub unsafe extern "C" fn mr_refined_get(refined: *const MrRefined, index: usize, row: *mut MrRefinedRow) -> MrStatus {
    guard(|| {
        let r = handle(refined, "refined")?;
        let slot = out(row, "row")?;
        let rec =
            r.records.get(index).ok_or_else(|| fail(MrStatus::OutOfRange, format!("index {index} of {}", r.records.len())))?;
        *slot = MrRefinedRow {
            has_module_mark: rec.record.module_mark.is_some(),
            module_mark: rec.record.module_mark.unwrap_or(f64::NAN),
            mai: rec.mai.map_or(-1, |m| i32::try_from(m).unwrap_or(i32::MAX)),
            has_rmm: rec.rmm.is_some(),
            rmm: rec.rmm.unwrap_or(f64::NAN),
            assessment_method: method_code(rec.record.assessment_method),
            year_of_study: rec.record.year_of_study,
            flag: flag_code(rec.flag),
        };
        Ok(())
    })
}

/// Serializes a refined table as CSV; free with [`mr_string_free`].
///
/// # Safety
/// `refined` must be a live handle; `out_csv` writable.
#[no_mangle]
pub unsafe extern "C" fn mr_refined_to_csv(refined: *const MrRefined, out_csv: *mut *mut libc::c_char) -> MrStatus {
    guard(|| {
        let r = handle(refined, "refined")?;
        let slot = out(out_csv, "out_csv")?;
        let mut buf = Vec::new();
        write_refined(&r.records, &mut buf).map_err(lib)?;
        *slot = to_c_string(String::from_utf8(buf).map_err(|_| fail(MrStatus::Data, "non-UTF-8 output"))?)?;
        Ok(())
    })
}

/// Total row of the per-method refinement summary.
///
/// # Safety
/// `refined` must be a live handle; `summary` writable.
#[no_mangle]
pub unsafe extern "C" fn mr_refined_summary(refined: *const MrRefined, summary: *mut MrSummary) -> MrStatus {
    guard(|| {
        let r = handle(refined, "refined")?;
        let slot = out(summary, "summary")?;
        let s = summarize_refinement(&r.records).map_err(lib)?;
        let total = s.total();
        *slot = MrSummary { module_count: total.module_count, mean_mm: total.mean_mm, mean_rmm: total.mean_rmm };
        Ok(())
    })
}

/// Department the refined table was built for, as a static string.
///
/// # Safety
/// `refined` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mr_refined_department(refined: *const MrRefined) -> *const libc::c_char {
    let Some(r) = refined.as_ref() else { return ptr::null() };
    let name: &'static str = match r.department {
        Department::Business => "Business\0",
        Department::CivilEng => "CivilEng\0",
        Department::CS => "CS\0",
        Department::ECSEng => "ECSEng\0",
        Department::Math => "Math\0",
        Department::MechEng => "MechEng\0",
    };
    name.as_ptr().cast()
}

/// Refined mark for one module; marks outside [0, 100] give NaN.
#[no_mangle]
pub extern "C" fn mr_rmm(module_mark: f64, mai: u32, beta1: f64, beta2: f64) -> f64 {
    if !(0.0..=100.0).contains(&module_mark) {
        return f64::NAN;
    }
    refine::rmm(module_mark, mai, RefineCoeffs { beta1, beta2 })
}

/// Paired two-tailed t-test of `a` against `b`, both of length `n`.
///
/// # Safety
/// `a` and `b` must point to `n` readable doubles; `result` writable.
#[no_mangle]
pub unsafe extern "C" fn mr_paired_ttest(a: *const f64, b: *const f64, n: usize, result: *mut MrTTest) -> MrStatus {
    guard(|| {
        let slot = out(result, "result")?;
        let r = paired_ttest(slice(a, n, "a")?, slice(b, n, "b")?).map_err(lib)?;
        *slot = MrTTest { t: r.t, p: r.p, df: r.df, mean_diff: r.mean_diff };
        Ok(())
    })
}

/// Pearson correlation of two length-`n` series.
///
/// # Safety
/// `x` and `y` must point to `n` readable doubles; `r` writable.
#[no_mangle]
pub unsafe extern "C" fn mr_pearson(x: *const f64, y: *const f64, n: usize, r: *mut f64) -> MrStatus {
    guard(|| {
        let slot = out(r, "r")?;
        *slot = pearson(slice(x, n, "x")?, slice(y, n, "y")?).map_err(lib)?;
        Ok(())
    })
}

/// Least-squares polynomial of degree 1 or 2; `beta2` is 0 for lines.
///
/// # Safety
/// `x` and `y` must point to `n` readable doubles; `fit` writable.
#[no_mangle]
pub unsafe extern "C" fn mr_fit_poly(x: *const f64, y: *const f64, n: usize, degree: u32, fit: *mut MrFit) -> MrStatus {
    guard(|| {
        let slot = out(fit, "fit")?;
        let f = fit_poly(slice(x, n, "x")?, slice(y, n, "y")?, degree as usize).map_err(lib)?;
        *slot = MrFit { beta0: f.beta0, beta1: f.beta1, beta2: f.beta2, r_squared: f.r_squared };
        Ok(())
    })
}
