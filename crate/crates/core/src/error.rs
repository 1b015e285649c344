use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Which end of a truncation window fell outside the signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowSide {
    Before,
    After,
}

impl std::fmt::Display for WindowSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WindowSide::Before => f.write_str("before onset"),
            WindowSide::After => f.write_str("after onset"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("onset alignment failed for event {event_id}: no band crossed its threshold")]
    AlignmentFailed { event_id: String },

    #[error("truncation window exceeds the signal {side} (needs {needed} samples, has {available})")]
    Truncation {
        side: WindowSide,
        needed: usize,
        available: usize,
    },

    #[error("degenerate kernel scale: all nearest-neighbour distances are zero")]
    DegenerateScale,

    #[error("degenerate kernel: row {row} sums to zero")]
    DegenerateKernel { row: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("ingestion failed for event {event_id}: {reason}")]
    Ingest { event_id: String, reason: String },

    #[error("run failed: {0}")]
    Run(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier, used for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Size(_) => "size",
            Error::AlignmentFailed { .. } => "alignment_failed",
            Error::Truncation { .. } => "truncation",
            Error::DegenerateScale => "degenerate_scale",
            Error::DegenerateKernel { .. } => "degenerate_kernel",
            Error::Numeric(_) => "numeric",
            Error::UndefinedCorrelation(_) => "undefined_correlation",
            Error::Ingest { .. } => "ingest",
            Error::Run(_) => "run",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
