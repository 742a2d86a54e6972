use std::io;
use std::path::{Path, PathBuf};

/// Error from reading one of the on-disk formats.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    /// Declared counts or checksums disagree with the content.
    #[error("integrity: {0}")]
    Integrity(String),
    #[error("truncated: {0}")]
    Truncated(String),
    /// Well-formed but unusable content (non-finite values, duplicates).
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl FormatError {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        FormatError::Parse {
            line,
            message: message.into(),
        }
    }
}

/// Process exit status for each error class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ExitCode {
    Ok = 0,
    Usage = 1,
    Data = 2,
    Integrity = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("input not found: {}", .0.display())]
    MissingInput(PathBuf),
    #[error("missing upstream artifact {}: run `infolab {producer}` first", .path.display())]
    MissingArtifact {
        path: PathBuf,
        producer: &'static str,
    },
    #[error("{}: {source}", .path.display())]
    Format { path: PathBuf, source: FormatError },
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Integrity(String),
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl Error {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Error::Usage(_) | Error::MissingInput(_) | Error::MissingArtifact { .. } => {
                ExitCode::Usage
            }
            Error::Format { source, .. } => match source {
                FormatError::Integrity(_) | FormatError::Truncated(_) => ExitCode::Integrity,
                _ => ExitCode::Data,
            },
            Error::Integrity(_) => ExitCode::Integrity,
            Error::Data(_) | Error::Io { .. } => ExitCode::Data,
        }
    }

    pub fn format(path: &Path, source: FormatError) -> Self {
        Error::Format {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            return Error::MissingInput(path.to_path_buf());
        }
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn data(e: impl std::fmt::Display) -> Self {
        Error::Data(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
