use std::io;

use thiserror::Error;

/// Errors raised by pipeline stages.
///
/// Per-record problems (bad cells, unknown ratio classes) are reported as
/// data inside the stage reports; only conditions that stop a stage from
/// producing any output become an `Error`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing mandatory column `{0}`")]
    MissingColumn(&'static str),

    #[error("unknown department `{0}`")]
    UnknownDepartment(String),

    #[error("inconsistent weightings: exam {exam} + coursework {coursework} != 100")]
    InconsistentWeightings { exam: u8, coursework: u8 },

    #[error("unknown ratio class {exam}:{coursework}")]
    UnknownRatioClass { exam: u8, coursework: u8 },

    #[error("invalid class table: {0}")]
    InvalidClassTable(String),

    #[error("no records")]
    NoRecords,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("too few observations: need {needed}, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("degenerate pairs: differences have zero variance")]
    DegeneratePairs,

    #[error("zero variance")]
    ZeroVariance,

    #[error("zero variance response")]
    ZeroVarianceResponse,

    #[error("degenerate design")]
    DegenerateDesign,

    #[error("unsupported polynomial degree {0}")]
    UnsupportedDegree(usize),

    #[error("mark {0} outside [0, 100]")]
    MarkOutOfRange(f64),

    #[error("training data needs at least two distinct labels")]
    SingleClass,

    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
