use std::path::PathBuf;

use crate::estimation::FitResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Parameter(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("no start converged (best objective {:.6e})", .best.objective)]
    NonConvergence { best: Box<FitResult> },

    #[error("training failed: {0}")]
    Training(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("cohort generation failed: {0}")]
    Generation(String),

    #[error("schema error in {path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("{} row error(s); first: {}", .0.len(), .0.first().map(|e| e.to_string()).unwrap_or_default())]
    Rows(Vec<RowError>),

    #[error("pipeline error: {0}")]
    Pipeline(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end: 1 for bad input,
    /// 2 for failures inside the pipeline, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_)
            | Error::Input(_)
            | Error::Schema { .. }
            | Error::Rows(_)
            | Error::Config { .. }
            | Error::Json(_) => 1,
            Error::NonConvergence { .. }
            | Error::Training(_)
            | Error::Model(_)
            | Error::Generation(_)
            | Error::Pipeline(_) => 2,
            Error::Io { .. } => 3,
        }
    }
}

/// A rejected CSV row. `row` is the 1-based data row number (header excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub row: usize,
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "row {}, field `{}`: {}",
            self.row, self.field, self.message
        )
    }
}
