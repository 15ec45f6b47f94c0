//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    /// The matrix handed to a full-column-rank operation is numerically rank
    /// deficient. In simulation this marks a degenerate channel draw.
    #[error("numerically rank-deficient matrix (sigma_min/sigma_max = {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("singular value decomposition did not converge")]
    SvdNonConvergence,

    #[error("search space of {size} candidates exceeds guard of {guard}")]
    GuardExceeded { size: u128, guard: u128 },

    #[error("unsupported constellation order {0} (expected 4, 16 or 64)")]
    UnsupportedOrder(usize),

    #[error("bit string length {len} is not a multiple of {bits_per_symbol}")]
    BitLength { len: usize, bits_per_symbol: usize },

    #[error("symbol vector has length {got}, expected {expected}")]
    SymbolLength { got: usize, expected: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code used by the command-line tools.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::GuardExceeded { .. } => 2,
            Error::Io { .. } => 3,
            _ => 1,
        }
    }
}
