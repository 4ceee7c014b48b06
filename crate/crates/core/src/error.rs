use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
///
/// Variants are grouped by the stage that raises them so the CLI can map
/// them onto exit codes (see [`Error::is_data_error`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    // -- ingestion --
    #[error("bad IDX magic: expected {expected:#010x}, found {found:#010x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("truncated IDX payload: header promises {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("label {value} at position {index} is outside 0..=9")]
    LabelOutOfRange { index: usize, value: u8 },
    #[error("malformed record at line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    // -- classifier --
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("value {0} outside the open interval (0, 1)")]
    DomainError(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("training diverged: loss became {loss} at epoch {epoch}, batch {batch}")]
    DivergedLoss { epoch: usize, batch: usize, loss: f64 },
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),

    // -- perturbations --
    #[error("unknown perturbation family {0:?}")]
    UnknownFamily(String),
    #[error("perturbation level {0} outside 1..=10")]
    BadLevel(u32),
    #[error("severity {value} outside the allowed range for {family}")]
    BadSeverity { family: String, value: f64 },
    #[error("calibration failed for {family} level {level}: {reason}")]
    CalibrationFailed {
        family: String,
        level: u32,
        reason: String,
    },
    #[error("malformed schedule: {0}")]
    MalformedSchedule(String),

    // -- clustering --
    #[error("class {0} has no correctly classified record")]
    EmptyClass(usize),
    #[error("cluster {0} lost all members")]
    EmptyCluster(usize),

    // -- analysis --
    #[error("no records with true class {class}{}", level.map(|p| format!(" at level {p}")).unwrap_or_default())]
    EmptyClassSet { class: usize, level: Option<u32> },
    #[error("zero distance between class {class} records and centroid {centroid}")]
    ZeroDistance { class: usize, centroid: usize },
    #[error("missing heatmap slice {family} level {level}")]
    MissingSlice { family: String, level: u32 },
    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),

    // -- orchestration --
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by bad input files rather than a broken stage.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::BadMagic { .. }
                | Error::Truncated { .. }
                | Error::LabelOutOfRange { .. }
                | Error::MalformedLine { .. }
                | Error::BadCheckpoint(_)
                | Error::MalformedSchedule(_)
                | Error::MalformedMatrix(_)
        )
    }

    /// Process exit code: 1 for bad configuration or arguments, 2 for bad
    /// input data, 3 for any other stage failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => match source.exit_code() {
                1 => 1,
                2 => 2,
                _ => 3,
            },
            Error::Config(_) | Error::UnknownFamily(_) | Error::BadLevel(_) | Error::BadSeverity { .. } => 1,
            e if e.is_data_error() => 2,
            _ => 3,
        }
    }
}
