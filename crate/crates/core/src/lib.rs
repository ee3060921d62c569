//! Cleansing, assessment-index refinement and evaluation of student
//! transcript records.

pub mod classify;
pub mod cleanse;
pub mod cli;
pub mod error;
pub mod ingest;
pub mod mai;
pub mod model;
pub mod refine;
pub mod report;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
