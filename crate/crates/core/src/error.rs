use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to load frame {index} ({path}): {reason}")]
    Load {
        index: usize,
        path: PathBuf,
        reason: String,
    },

    #[error("no frames")]
    NoFrames,

    /// Inconsistent dimensions, channel counts or lengths.
    #[error("structural error: {0}")]
    Structure(String),

    #[error("out of range: {0}")]
    Range(String),

    /// Malformed external file (JSON, CSV, embeddings, raw container).
    #[error("format error: {0}")]
    Format(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("label {0:?} never detected")]
    LabelNotDetected(String),

    #[error("nothing to fill from")]
    NothingToFill,

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("distance backend failed at frame {index}: {source}")]
    Backend {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("stage {stage} failed{}: {source}", .frame.map(|f| format!(" at frame {f}")).unwrap_or_default())]
    Stage {
        stage: &'static str,
        frame: Option<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error("external command failed: {0}")]
    External(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn stage(stage: &'static str, frame: Option<usize>, source: Error) -> Self {
        Error::Stage {
            stage,
            frame,
            source: Box::new(source),
        }
    }

    /// True for errors caused by missing or malformed user input, as opposed
    /// to failures while processing valid input.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Io { .. }
            | Error::Load { .. }
            | Error::NoFrames
            | Error::Format(_)
            | Error::Config(_) => true,
            Error::Stage { source, .. } | Error::Backend { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}
