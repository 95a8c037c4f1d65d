//! Binary PGM images and 16-bit PCM WAV audio.

mod pgm;
mod wav;

use std::fmt;
use std::path::PathBuf;

pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm};
pub use wav::{decode_wav, encode_wav, read_wav, write_wav, WavAudio};

/// A file that does not parse, with the byte offset where parsing stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatError {
    pub path: Option<PathBuf>,
    pub offset: usize,
    pub message: String,
}

impl FormatError {
    pub(crate) fn at(offset: usize, message: impl Into<String>) -> Self {
        Self {
            path: None,
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn with_path(mut self, path: impl Into<PathBuf>) -> Self {
        self.path = Some(path.into());
        self
    }
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = &self.path {
            write!(f, "{}: ", p.display())?;
        }
        write!(f, "{} (byte {})", self.message, self.offset)
    }
}

impl std::error::Error for FormatError {}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Format(#[from] FormatError),
}

impl IoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
