//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown identifier: {0}")]
    UnknownId(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("eigensolver did not converge: best residual {best_residual:.3e} after {iterations} iterations")]
    NonConvergence {
        best_residual: f64,
        iterations: usize,
    },

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numeric failure in op `{op}` (tape node {node})")]
    NonFinite { op: &'static str, node: usize },

    #[error("training aborted: {0}")]
    Train(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// Stable machine-readable tag, used by the CLI's one-line error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::UnknownId(_) => "unknown-id",
            Error::Dimension(_) => "dimension",
            Error::Degenerate(_) => "degenerate",
            Error::NonConvergence { .. } => "no-convergence",
            Error::Infeasible(_) => "infeasible",
            Error::Config(_) => "config",
            Error::NonFinite { .. } => "non-finite",
            Error::Train(_) => "train",
            Error::Metric(_) => "metric",
            Error::Checkpoint(_) => "checkpoint",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
