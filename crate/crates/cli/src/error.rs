use std::path::Path;

/// Failure of a CLI command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid flags or parameter values (exit 1).
    #[error("{0}")]
    Usage(String),
    /// Malformed input data or model files (exit 2).
    #[error("{0}")]
    Data(String),
    /// File-system failures (exit 3).
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    /// Wrap a library error, prefixing the file it came from.
    pub fn core(context: &Path, err: som_atlas::Error) -> Self {
        let msg = format!("{}: {err}", context.display());
        if err.is_usage() {
            CliError::Usage(msg)
        } else {
            CliError::Data(msg)
        }
    }
}

impl From<som_atlas::Error> for CliError {
    fn from(err: som_atlas::Error) -> Self {
        if err.is_usage() {
            CliError::Usage(err.to_string())
        } else {
            CliError::Data(err.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
