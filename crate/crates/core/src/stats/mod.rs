//! Statistical battery: group means, paired t-tests, Pearson correlation
//! and polynomial least squares.

mod correlation;
mod means;
mod regression;
pub mod tdist;
mod ttest;

pub use correlation::{correlation_matrix, pearson, CorrelationMatrix, Factor};
pub use means::{group_means, table_one, table_one_ttests, GroupMeansRow, GroupMeansTable, ReferenceRow};
pub use regression::{compare_models, fit_poly, fit_refine_coeffs, ModelComparison, QuadFit};
pub use ttest::{paired_ttest, TTestResult};
