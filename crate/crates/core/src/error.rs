use thiserror::Error;

/// Errors raised by lattice construction, diagonalization and the replica pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Sizes, lengths or parameters outside their documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Input that is well formed but outside what the construction supports.
    #[error("unsupported input: {0}")]
    Unsupported(String),

    /// An operation produced a zero vector where a direction was required.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("matrix is not symmetric: |H[{row},{col}] - H[{col},{row}]| = {asymmetry:e}")]
    NonSymmetric { row: usize, col: usize, asymmetry: f64 },

    /// Reports the pair of basis vectors whose inner product is furthest from δ_ij.
    #[error("basis is not orthonormal: <b{i}, b{j}> deviates from delta by {deviation:e}")]
    NonOrthonormal { i: usize, j: usize, deviation: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("experiment {name}: {source}")]
    Experiment {
        name: String,
        #[source]
        source: Box<Error>,
    },
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
