use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Rejected configuration; `field` names the offending key.
    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("could not parse config {path}: {reason}")]
    ConfigSyntax { path: PathBuf, reason: String },

    #[error(transparent)]
    Numerics(#[from] natherm::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config { field: field.into(), reason: reason.into() }
    }

    /// Process exit status: 2 for configuration problems, 3 when a solver
    /// fails to converge, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::ConfigSyntax { .. } => 2,
            CliError::Numerics(natherm::Error::InvalidParameter { .. }) => 2,
            CliError::Numerics(natherm::Error::NoConvergence { .. } | natherm::Error::Unachievable { .. }) => 3,
            _ => 1,
        }
    }
}

/// Re-tags a core parameter error as a config error on `field`.
pub(crate) fn as_config(field: &str) -> impl Fn(natherm::Error) -> CliError + '_ {
    move |e| match e {
        natherm::Error::InvalidParameter { reason, .. } => CliError::config(field, reason),
        other => CliError::config(field, other.to_string()),
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
