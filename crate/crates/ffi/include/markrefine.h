#ifndef MARKREFINE_H
#define MARKREFINE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MrStatus {
  MR_STATUS_OK = 0,
  MR_STATUS_NULL_POINTER = 1,
  MR_STATUS_INVALID_UTF8 = 2,
  MR_STATUS_INVALID_ARGUMENT = 3,
  /**
   * Input data could not be parsed or failed validation.
   */
  MR_STATUS_DATA = 4,
  /**
   * Too few or degenerate observations for a statistic.
   */
  MR_STATUS_NUMERIC = 5,
  MR_STATUS_OUT_OF_RANGE = 6,
  MR_STATUS_PANIC = 7,
} MrStatus;

/**
 * Ratio-class tables for every department.
 */
typedef struct MrClassTables MrClassTables;

/**
 * Transcript records for one department.
 */
typedef struct MrRecords MrRecords;

/**
 * Records with their assessment index and refined mark.
 */
typedef struct MrRefined MrRefined;

typedef struct MrCleanseCounts {
  size_t methods_inferred;
  size_t records_dropped;
  size_t unresolved;
  size_t inconsistent;
} MrCleanseCounts;

/**
 * One refined record as plain values. `mai` is -1 when no index was
 * assigned; `flag` is 0 for none, 1 unknown ratio class, 2 missing
 * weightings, 3 missing mark.
 */
typedef struct MrRefinedRow {
  bool has_module_mark;
  double module_mark;
  int32_t mai;
  bool has_rmm;
  double rmm;
  /**
   * 0 exam, 1 coursework, 2 both, -1 unknown.
   */
  int32_t assessment_method;
  uint8_t year_of_study;
  int32_t flag;
} MrRefinedRow;

typedef struct MrSummary {
  size_t module_count;
  double mean_mm;
  double mean_rmm;
} MrSummary;

typedef struct MrTTest {
  double t;
  double p;
  uint32_t df;
  double mean_diff;
} MrTTest;

typedef struct MrFit {
  double beta0;
  double beta1;
  double beta2;
  double r_squared;
} MrFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mr_version(void);

/**
 * Message for the last failed call on this thread, or NULL after a
 * successful call. Valid until the next call on the same thread.
 */
const char *mr_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void mr_string_free(char *s);

/**
 * Parses transcript CSV text. Rows that fail validation are skipped and
 * counted in `rows_rejected` (which may be NULL).
 *
 * # Safety
 * `csv` and `dept` must be NUL-terminated strings; `out` must be writable.
 */
enum MrStatus mr_records_parse_csv(const char *csv,
                                   const char *dept,
                                   struct MrRecords **out_records,
                                   size_t *rows_rejected);

/**
 * # Safety
 * `records` must be NULL or a handle from this library, freed once.
 */
void mr_records_free(struct MrRecords *records);

/**
 * Number of records, 0 for NULL.
 *
 * # Safety
 * `records` must be NULL or a live handle.
 */
size_t mr_records_len(const struct MrRecords *records);

/**
 * Fills missing assessment methods and drops records without a module
 * mark, in place. `counts` may be NULL.
 *
 * # Safety
 * `records` must be a live handle not used concurrently.
 */
enum MrStatus mr_records_cleanse(struct MrRecords *records, struct MrCleanseCounts *counts);

/**
 * Serializes records as transcript CSV; free the result with
 * [`mr_string_free`].
 *
 * # Safety
 * `records` must be a live handle; `out_csv` must be writable.
 */
enum MrStatus mr_records_to_csv(const struct MrRecords *records, char **out_csv);

/**
 * Built-in class tables.
 */
struct MrClassTables *mr_class_tables_builtin(void);

/**
 * Replaces the tables of the departments listed in `csv` (columns
 * department, exam_weighting, cswk_weighting).
 *
 * # Safety
 * `tables` must be a live handle; `csv` a NUL-terminated string.
 */
enum MrStatus mr_class_tables_load(struct MrClassTables *tables, const char *csv);

/**
 * Number of ratio classes for a department, 0 on error.
 *
 * # Safety
 * `tables` must be a live handle; `dept` a NUL-terminated string.
 */
size_t mr_class_tables_len(const struct MrClassTables *tables, const char *dept);

/**
 * # Safety
 * `tables` must be NULL or a handle from this library, freed once.
 */
void mr_class_tables_free(struct MrClassTables *tables);

/**
 * Assigns indices and refined marks. `tables` may be NULL for the built-in
 * tables.
 *
 * # Safety
 * `records` must be a live handle, `tables` NULL or a live handle and
 * `out_refined` writable.
 */
enum MrStatus mr_refine(const struct MrRecords *records,
                        const struct MrClassTables *tables,
                        double beta1,
                        double beta2,
                        struct MrRefined **out_refined);

/**
 * Parses a refined table previously written by [`mr_refined_to_csv`] or
 * the command-line tool.
 *
 * # Safety
 * `csv` and `dept` must be NUL-terminated strings; `out_refined` writable.
 */
enum MrStatus mr_refined_parse_csv(const char *csv,
                                   const char *dept,
                                   struct MrRefined **out_refined);

/**
 * # Safety
 * `refined` must be NULL or a handle from this library, freed once.
 */
void mr_refined_free(struct MrRefined *refined);

/**
 * # Safety
 * `refined` must be NULL or a live handle.
 */
size_t mr_refined_len(const struct MrRefined *refined);

/**
 * Copies record `index` into `row`.
 *
 * # Safety
 * `refined` must be a live handle; `row` writable.
 */
enum MrStatus mr_refined_get(const struct MrRefined *refined,
                             size_t index,
                             struct MrRefinedRow *row);

/**
 * Serializes a refined table as CSV; free with [`mr_string_free`].
 *
 * # Safety
 * `refined` must be a live handle; `out_csv` writable.
 */
enum MrStatus mr_refined_to_csv(const struct MrRefined *refined, char **out_csv);

/**
 * Total row of the per-method refinement summary.
 *
 * # Safety
 * `refined` must be a live handle; `summary` writable.
 */
enum MrStatus mr_refined_summary(const struct MrRefined *refined, struct MrSummary *summary);

/**
 * Department the refined table was built for, as a static string.
 *
 * # Safety
 * `refined` must be NULL or a live handle.
 */
const char *mr_refined_department(const struct MrRefined *refined);

/**
 * Refined mark for one module; marks outside [0, 100] give NaN.
 */
double mr_rmm(double module_mark, uint32_t mai, double beta1, double beta2);

/**
 * Paired two-tailed t-test of `a` against `b`, both of length `n`.
 *
 * # Safety
 * `a` and `b` must point to `n` readable doubles; `result` writable.
 */
enum MrStatus mr_paired_ttest(const double *a, const double *b, size_t n, struct MrTTest *result);

/**
 * Pearson correlation of two length-`n` series.
 *
 * # Safety
 * `x` and `y` must point to `n` readable doubles; `r` writable.
 */
enum MrStatus mr_pearson(const double *x, const double *y, size_t n, double *r);

/**
 * Least-squares polynomial of degree 1 or 2; `beta2` is 0 for lines.
 *
 * # Safety
 * `x` and `y` must point to `n` readable doubles; `fit` writable.
 */
enum MrStatus mr_fit_poly(const double *x,
                          const double *y,
                          size_t n,
                          uint32_t degree,
                          struct MrFit *fit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MARKREFINE_H */
