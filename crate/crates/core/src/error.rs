use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} is invalid: must be even and at least 4")]
    InvalidGrid(usize),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("alpha {0} outside [0, 1]")]
    InvalidAlpha(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frequency {eta} beyond partition range (upper bound {limit})")]
    EtaOutOfRange { eta: u64, limit: u64 },

    #[error("band p={p} reaches frequency {upper}, beyond the grid half-width {half}")]
    BandExceedsGrid { p: i64, upper: u64, half: u64 },

    #[error("window has no closed-form time profile")]
    MissingTimeProfile,

    #[error("partition too short for grid: need p_max >= {required}")]
    PartitionTooShort { required: usize },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("stack sum vanishes at {} grid frequencies (first: {:?})", frequencies.len(), frequencies.first())]
    NonInvertible { frequencies: Vec<i64> },

    #[error("grid size {n} too large for dense eigendecomposition (limit {limit})")]
    GridTooLarge { n: usize, limit: usize },

    #[error("malformed container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
