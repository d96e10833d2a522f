use std::path::PathBuf;

use thiserror::Error;

/// Coarse failure classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Infeasible,
    LineFinding,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Usage => "usage",
            ErrorCategory::Data => "data",
            ErrorCategory::Infeasible => "infeasible",
            ErrorCategory::LineFinding => "line-finding",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid model document: {0}")]
    Model(String),

    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("line-finding failed: {0}")]
    LineFinding(String),

    #[error("no combination of {lines} lines is free of intersections")]
    NoValidCombination { lines: usize },

    #[error("{0}")]
    Infeasible(#[from] InfeasibleLine),

    #[error("linear program: {0}")]
    Solver(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. } | Error::Csv(_) | Error::MissingColumn(_) | Error::Data(_) | Error::Model(_) => {
                ErrorCategory::Data
            }
            Error::Usage(_) => ErrorCategory::Usage,
            Error::LineFinding(_) | Error::NoValidCombination { .. } => ErrorCategory::LineFinding,
            Error::Infeasible(_) | Error::Solver(_) => ErrorCategory::Infeasible,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// A prototype line whose soft-label program has no feasible point.
#[derive(Debug, Clone, Error)]
#[error(
    "soft-label program infeasible for classes {class_ids:?} at positions {positions:?} \
     (segment length {length}); conflicting constraints: {conflicts:?}"
)]
pub struct InfeasibleLine {
    pub class_ids: Vec<usize>,
    pub positions: Vec<f64>,
    pub length: f64,
    /// Names of the constraints that could not be satisfied simultaneously.
    pub conflicts: Vec<String>,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
