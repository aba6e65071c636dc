use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] gaitprior_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}{}: {message}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Format { path: PathBuf, line: Option<usize>, message: String },
    #[error("{}: unsupported format version {found} (expected {expected})", path.display())]
    UnsupportedVersion { path: PathBuf, found: u64, expected: u64 },
    #[error("{0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn format(path: &Path, line: Option<usize>, message: impl Into<String>) -> Self {
        Self::Format { path: path.to_path_buf(), line, message: message.into() }
    }

    /// Process exit status: 3 for numerical divergence, 2 for everything
    /// else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(gaitprior_core::Error::Diverged { .. }) => 3,
            _ => 2,
        }
    }
}
