use std::path::PathBuf;

use robust_qbc_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input; `line` is 1-based.
    #[error("{}line {line}: {message}", source_prefix(.source_name))]
    Parse { source_name: Option<String>, line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

fn source_prefix(name: &Option<String>) -> String {
    name.as_ref().map(|n| format!("{n}: ")).unwrap_or_default()
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        CliError::Parse { source_name: None, line, message: message.into() }
    }

    /// Attaches a file name to a parse error.
    pub fn in_file(self, name: impl Into<String>) -> Self {
        match self {
            CliError::Parse { line, message, .. } => CliError::Parse { source_name: Some(name.into()), line, message },
            other => other,
        }
    }

    /// 1 usage, 2 data or parse, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Schema(_) => 2,
            CliError::Core(e) => match e {
                CoreError::Config(_) | CoreError::Parameter(_) | CoreError::UnnormalizableMixture => 1,
                CoreError::Data(_) | CoreError::Domain(_) | CoreError::DimensionMismatch { .. } => 2,
                CoreError::Fit(_) | CoreError::Numeric(_) | CoreError::PoolExhausted => 3,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
