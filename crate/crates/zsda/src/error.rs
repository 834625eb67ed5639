use std::io;
use std::path::{Path, PathBuf};

/// Errors raised by file handling and the command line.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] zsda_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
    #[error("run failed: {0}")]
    Run(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_CONTRACT: u8 = 4;
pub const EXIT_TRAINING: u8 = 5;

impl Error {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn format(path: impl AsRef<Path>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().to_path_buf(),
            msg: msg.into(),
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Core(zsda_core::Error::Usage(msg.into()))
    }

    pub fn exit_code(&self) -> u8 {
        use zsda_core::Error as C;
        match self {
            Error::Core(C::Usage(_) | C::Config(_) | C::Vocab { .. }) => EXIT_USAGE,
            Error::Core(C::Contract(_)) => EXIT_CONTRACT,
            Error::Core(C::Training(_) | C::NonFinite { .. } | C::Clustering(_)) => EXIT_TRAINING,
            Error::Core(_) => EXIT_OTHER,
            Error::Io { .. } | Error::Format { .. } => EXIT_IO,
            Error::Run(_) => EXIT_OTHER,
        }
    }
}
