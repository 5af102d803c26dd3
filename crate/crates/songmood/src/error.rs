use std::fmt;
use std::path::Path;

use songmood_core::Error as CoreError;

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or config values.
    #[error("config error: {0}")]
    Usage(String),
    /// Malformed or inconsistent input data.
    #[error("data error: {file}{}: {message}", line_suffix(*.line))]
    Data {
        file: String,
        line: Option<usize>,
        message: String,
    },
    /// A broken internal invariant.
    #[error("internal error: {0}")]
    Internal(String),
}

fn line_suffix(line: Option<usize>) -> String {
    line.map(|l| format!(":{l}")).unwrap_or_default()
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data { .. } => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError::Usage(msg.to_string())
    }

    pub fn data(file: &Path, line: Option<usize>, msg: impl fmt::Display) -> Self {
        CliError::Data {
            file: file.display().to_string(),
            line,
            message: msg.to_string(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::data(path, None, e)
    }

    /// Classifies a core error raised while processing `file`.
    pub fn core(file: Option<&Path>, e: CoreError) -> Self {
        let file = file.map(|p| p.display().to_string()).unwrap_or_else(|| "-".into());
        match e {
            CoreError::InvalidArgument { .. } | CoreError::InfeasibleConfig(_) => CliError::Usage(e.to_string()),
            CoreError::Leakage(_) | CoreError::DegenerateDenominator { .. } => CliError::Internal(e.to_string()),
            _ => CliError::Data {
                file,
                line: None,
                message: e.to_string(),
            },
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::core(None, e)
    }
}

/// Attaches a file to core errors.
pub trait Context<T> {
    fn in_file(self, path: &Path) -> CliResult<T>;
}

impl<T> Context<T> for songmood_core::Result<T> {
    fn in_file(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| CliError::core(Some(path), e))
    }
}

impl<T> Context<T> for std::io::Result<T> {
    fn in_file(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| CliError::io(path, e))
    }
}
