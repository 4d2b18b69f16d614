//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by tensor construction, linear algebra kernels, Krylov
/// iterations, and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes are incompatible for the requested operation.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An index lies outside the valid range of a tensor or block vector.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// An argument value is invalid (empty dimension, bad tolerance, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The block Arnoldi normalization failed at the given step because the
    /// candidate block is (numerically) rank deficient without being an exact
    /// invariant-subspace termination.
    #[error("block Arnoldi breakdown at step {step}: {reason}")]
    Breakdown { step: usize, reason: String },

    /// A matrix function evaluation could not be completed (singular matrix
    /// for the inverse, eigenvalue on the branch cut for the square root,
    /// missing derivative evaluator for a clustered spectrum, ...).
    #[error("matrix function evaluation failed: {0}")]
    MatrixFunction(String),

    /// An eigendecomposition failed or was too ill conditioned to trust.
    #[error("eigendecomposition failed: {0}")]
    Eigendecomposition(String),

    /// An iterative backend stopped before reaching its tolerance; the
    /// message names the terminal status and cycle count.
    #[error("iteration did not converge: {0}")]
    NotConverged(String),

    /// A facewise operation failed on one Fourier-domain face; carries the
    /// face index alongside the underlying error.
    #[error("face {face}: {source}")]
    Face {
        face: usize,
        #[source]
        source: Box<Error>,
    },

    /// A result expected to be real carried too much imaginary mass.
    #[error("cast to real failed: max imaginary magnitude {imag_max:.3e} exceeds tolerance {tol:.3e}")]
    RealCast { imag_max: f64, tol: f64 },

    /// An adjacency tensor violated the undirected-network invariants.
    #[error("invalid adjacency tensor: {0}")]
    InvalidAdjacency(String),

    /// A text tensor file could not be parsed; carries the 1-based line
    /// number of the offending input line.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Underlying I/O failure while reading or writing a tensor file.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Convenient alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps an error with the Fourier-domain face index it occurred on.
    pub fn on_face(self, face: usize) -> Error {
        Error::Face {
            face,
            source: Box::new(self),
        }
    }
}
