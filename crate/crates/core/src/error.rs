use std::path::PathBuf;

use thiserror::Error;

use crate::classify::codec::ModelCodecError;
use crate::imaging::pgm::PgmError;
use crate::imaging::BoundingBox;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Pgm(#[from] PgmError),

    #[error(transparent)]
    ModelCodec(#[from] ModelCodecError),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("box {bbox} is not inside a {width}x{height} image")]
    OutOfBounds {
        bbox: BoundingBox,
        width: usize,
        height: usize,
    },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("object {object} is not centered in region {region} (offset {offset:?})")]
    NotCentered {
        region: BoundingBox,
        object: BoundingBox,
        offset: (i64, i64),
    },

    #[error("anchor lost: best match error {best_error} exceeds limit {max_error}")]
    AnchorLost { best_error: f64, max_error: f64 },

    #[error("shift ({dx}, {dy}) leaves no valid pixel in a {width}x{height} background")]
    ShiftOutOfFrame {
        dx: i64,
        dy: i64,
        width: usize,
        height: usize,
    },

    #[error("training failed: {0}")]
    Training(String),

    #[error("mode {mode} requires {what}")]
    MissingInput { mode: &'static str, what: &'static str },

    #[error("infeasible scene: {0}")]
    InfeasibleScene(String),

    #[error("frame index {index} out of range (sequence has {len} frames)")]
    FrameIndex { index: usize, len: usize },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("frame {id}: {source}")]
    Frame {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Attach the offending file to an error.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// Attach the offending frame to an error.
    pub fn in_frame(self, id: impl Into<String>) -> Self {
        Error::Frame {
            id: id.into(),
            source: Box::new(self),
        }
    }

    /// Peel file and frame context to get at the underlying error kind.
    pub fn root(&self) -> &Error {
        match self {
            Error::File { source, .. } | Error::Frame { source, .. } => source.root(),
            other => other,
        }
    }
}
