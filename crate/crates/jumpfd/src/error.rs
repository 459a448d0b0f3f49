//! Crate-wide error type.
//!
//! Every fallible public operation returns [`Result`]. Failures carry enough
//! context to identify the failing stage without a debugger: parse errors
//! carry a byte offset, interface-coupling failures name the Taylor order at
//! which elimination broke down, and solver errors report the residual that
//! was actually achieved.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// The expression text is not well formed. `offset` is the byte position
    /// of the first offending character in the input.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// Evaluation left the domain of an elementary function (square root of
    /// a negative value, division by zero) instead of silently producing NaN.
    #[error("evaluation domain error: {message}")]
    Domain { message: String },

    /// A jet of unsupported degree was requested.
    #[error("jet degree {requested} exceeds the supported maximum {max}")]
    DegreeCap { requested: usize, max: usize },

    /// The diffusion coefficient vanishes where the scheme needs to divide
    /// by it.
    #[error("degenerate coefficient: a = {value:.6e} at the expansion point")]
    DegenerateCoefficient { value: f64 },

    /// Grid construction or point classification failed.
    #[error("geometry error: {message}")]
    Geometry { message: String },

    /// The projection of an irregular node onto the interface failed.
    #[error("base point search failed at node ({i}, {j}): {message}")]
    BasePoint { i: usize, j: usize, message: String },

    /// Elimination of the cross-interface jet broke down: the 2×2 pivot at
    /// Taylor order `order` is numerically singular.
    #[error("interface coupling pivot at order {order} is singular (|det| = {det:.3e})")]
    SingularPivot { order: usize, det: f64 },

    /// Stencil derivation failed at a node (rank defect, residual too large).
    #[error("stencil derivation failed: {message}")]
    Stencil { message: String },

    /// Direct linear solve hit a zero pivot or an invalid band structure.
    #[error("linear solver error: {message}")]
    Singular { message: String },

    /// The iterative solver did not reach the requested tolerance.
    #[error("iterative solver stalled after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// A problem description failed validation.
    #[error("invalid problem: {message}")]
    Problem { message: String },

    /// File I/O failed while reading a problem or writing reports.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON serialisation of a report failed.
    #[error("serialisation error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Shorthand for a [`Error::Domain`] with a formatted message.
    pub fn domain(message: impl Into<String>) -> Self {
        Error::Domain {
            message: message.into(),
        }
    }

    /// Shorthand for a [`Error::Geometry`] with a formatted message.
    pub fn geometry(message: impl Into<String>) -> Self {
        Error::Geometry {
            message: message.into(),
        }
    }

    /// Shorthand for a [`Error::Stencil`] with a formatted message.
    pub fn stencil(message: impl Into<String>) -> Self {
        Error::Stencil {
            message: message.into(),
        }
    }

    /// Shorthand for a [`Error::Problem`] with a formatted message.
    pub fn problem(message: impl Into<String>) -> Self {
        Error::Problem {
            message: message.into(),
        }
    }
}
