//! Error type shared by every module in the crate.

/// Anything that can go wrong while training, analyzing, or exporting.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration value (bad order, discount, weights, grid, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Training could not proceed (e.g. empty corpus).
    #[error("training error: {0}")]
    Training(String),

    /// A function argument violated its contract.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A structured input file failed to parse; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Well-formed input whose content violates an invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// Not enough data points to carry out a fit.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A persisted file declares a format version this build does not read.
    #[error("unsupported model file version {0}")]
    Version(u32),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error onto.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 3,
            Error::Json(_) => 2,
            Error::Config(_)
            | Error::Training(_)
            | Error::Argument(_)
            | Error::Parse { .. }
            | Error::Validation(_)
            | Error::InsufficientData(_)
            | Error::Version(_) => 2,
        }
    }
}
