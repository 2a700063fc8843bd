use std::path::PathBuf;

use credal_core::CredalError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}{message}", path.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default())]
    Parse { path: Option<PathBuf>, message: String },

    #[error("invalid scenario: key `{key}`: {message}")]
    Invalid { key: String, message: String },

    #[error("scenario is of kind `{found}` but the `{expected}` command was used")]
    KindMismatch { expected: &'static str, found: &'static str },

    #[error("{context}: {source}")]
    Run {
        context: String,
        #[source]
        source: CredalError,
    },

    #[error("writing outputs: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn invalid(key: &str, message: impl std::fmt::Display) -> Self {
        CliError::Invalid { key: key.to_string(), message: message.to_string() }
    }

    pub fn run(context: impl Into<String>) -> impl FnOnce(CredalError) -> Self {
        let context = context.into();
        move |source| CliError::Run { context, source }
    }

    pub(crate) fn at_path(self, p: &std::path::Path) -> Self {
        match self {
            CliError::Parse { message, .. } => CliError::Parse { path: Some(p.to_path_buf()), message },
            other => other,
        }
    }

    /// Whether the error reports a violated invariant rather than bad input
    /// or an I/O problem.
    pub fn is_violation(&self) -> bool {
        let CliError::Run { source, .. } = self else {
            return false;
        };
        let mut e = source;
        while let CredalError::AtIteration { source, .. } = e {
            e = source;
        }
        matches!(e, CredalError::SandwichViolation { .. } | CredalError::NotMonotone { .. })
    }
}
