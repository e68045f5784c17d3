use std::path::PathBuf;

use crate::domain::ClassId;
use crate::ingest::raster::Season;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("duplicate chip_id {0:?}")]
    DuplicateChip(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("no aligned chips")]
    NoAlignedChips,
    #[error("no valid pixels")]
    NoValidPixels,
    #[error("season {0} has no dates")]
    EmptySeason(Season),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate variance")]
    DegenerateVariance,
    #[error("need at least 2 usable runs, got {usable}")]
    InsufficientRuns { usable: usize },
    #[error("grid axis {0} is empty")]
    EmptyAxis(&'static str),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("class {0} absent from results")]
    ClassAbsent(ClassId),
}

impl Error {
    /// True for problems with the caller's inputs (bad files, bad
    /// configuration, invalid data) as opposed to failures while running.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Write { .. })
    }
}
