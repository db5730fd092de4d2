use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the reconstruction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("no shared background pixels between keyframes")]
    NoSharedBackground,

    #[error("degenerate depth: mean background depth of keyframe {keyframe} is zero")]
    DegenerateDepth { keyframe: usize },

    #[error("human not visible in keyframe point map{}", keyframe_suffix(.keyframe))]
    HumanNotVisible { keyframe: Option<usize> },

    /// A bundle file is present but its contents do not match the manifest.
    #[error("{file}: field `{field}`: {reason}")]
    Load {
        file: String,
        field: String,
        reason: String,
    },

    #[error("non-finite {quantity} at frame {frame}")]
    NonFinite {
        quantity: &'static str,
        frame: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

fn keyframe_suffix(keyframe: &Option<usize>) -> String {
    keyframe
        .map(|k| format!(" (frame {k})"))
        .unwrap_or_default()
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn load(
        file: impl Into<String>,
        field: impl Into<String>,
        reason: impl Into<String>,
    ) -> Self {
        Error::Load {
            file: file.into(),
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Broad failure class, used by the command-line driver to pick an exit code.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::NonFinite { .. } | Error::Numerical(_) => ErrorKind::Numerical,
            Error::Json { source, .. } if source.is_io() => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Numerical,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
