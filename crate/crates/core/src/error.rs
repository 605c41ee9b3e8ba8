use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corrupted volume file {path}: expected {expected} payload bytes, found {actual}")]
    Corrupted {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },

    #[error("malformed volume header in {path}: {reason}")]
    BadHeader { path: PathBuf, reason: String },

    #[error("volume `{0}` not found in manifest")]
    NotFound(String),

    #[error("slice dimension mismatch in {path}: expected {expected:?}, found {found:?}")]
    SliceDims {
        path: PathBuf,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("unsupported image {path}: {reason}")]
    Image { path: PathBuf, reason: String },

    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimMismatch([usize; 3], [usize; 3]),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("volume `{0}` has no labeled slices")]
    NoLabeledSlices(String),

    #[error("need at least 2 volumes for a volume-level split, found {0}; slice-level splits are not supported")]
    TooFewVolumes(usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("trainer protocol error at line {line}: {reason}")]
    Protocol { line: usize, reason: String },

    #[error("trainer failed: {0}")]
    Trainer(String),

    #[error("trainer timed out after {0:?}")]
    Timeout(std::time::Duration),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("grid config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|e| Error::io(path, e))
    }
}
