use std::fmt;
use std::io;
use std::path::PathBuf;

/// Errors of the front end. Exit codes follow [`CliError::exit_code`].
#[derive(Debug)]
pub enum CliError {
    Io {
        path: PathBuf,
        source: io::Error,
    },
    /// Syntax or type error while reading a config or input file.
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    /// Well-formed input that describes something invalid.
    Config {
        path: PathBuf,
        message: String,
    },
    Engine(multiphoton_core::Error),
}

impl CliError {
    pub fn config(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Config { path: path.into(), message: message.into() }
    }

    /// 2 for bad input, 3 for numerical failures (defective spectra, unstable limits).
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Engine(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Parse { path, line, column, message } => {
                write!(f, "{}:{line}:{column}: {message}", path.display())
            }
            CliError::Config { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Engine(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CliError::Io { source, .. } => Some(source),
            CliError::Engine(e) => Some(e),
            _ => None,
        }
    }
}

impl From<multiphoton_core::Error> for CliError {
    fn from(e: multiphoton_core::Error) -> Self {
        CliError::Engine(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
