//! Error taxonomy shared by every module.
//!
//! Every fallible public operation maps its failure to exactly one
//! [`ToolError`] variant; diagnostics that are not failures (validation
//! findings, dropped-row counts) are returned as data instead.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ToolError {
    /// A row or cell could not be parsed beyond the configured tolerance.
    #[error("parse error: {0}")]
    Parse(String),

    /// A file header or feature schema did not match expectations.
    #[error("schema error: {0}")]
    Schema(String),

    /// A time join or resample produced no usable rows.
    #[error("gap error: {0}")]
    Gap(String),

    /// A computation produced NaN or infinity where a finite value is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A linear system is rank-deficient and unregularized.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// An iterative fit failed to converge or its loss left the finite range.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A split or fold plan would leave a partition empty.
    #[error("empty split: {0}")]
    EmptySplit(String),

    /// Invalid run configuration or incompatible arguments.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl ToolError {
    /// Process exit code for the CLI: 2 ingest, 3 train, 4 predict/schema, 5 config.
    pub fn exit_code(&self) -> i32 {
        match self {
            ToolError::Parse(_) | ToolError::Gap(_) | ToolError::Io(_) => 2,
            ToolError::Convergence(_) | ToolError::SingularMatrix(_) | ToolError::NonFinite(_) => 3,
            ToolError::Schema(_) => 4,
            ToolError::Config(_) | ToolError::EmptySplit(_) => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, ToolError>;
