//! Crate-wide error type.

use std::fmt;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by grid construction, body validation and the numerical
/// operators.
#[derive(Debug)]
pub enum Error {
    /// Grid construction parameters are out of range, or two grids that
    /// must match do not.
    Grid(String),
    /// A scalar parameter (exponent, tolerance, step count, ...) is outside
    /// the documented domain of the operation.
    Parameter(String),
    /// A point lies outside the closure of the body, or an evaluation point
    /// violates the operator's domain.
    Domain(String),
    /// The support samples fail strict convexity: `h'' + h` (or the 3-D
    /// analogue) dropped to or below the degeneracy floor at some node.
    DegenerateConvexity { node: usize, min_b: f64 },
    /// The operation is not available for this body representation
    /// (e.g. curvature of a 3-D body loaded from bare support samples).
    Unsupported(String),
    /// An iteration failed to reach its tolerance: stalled time step,
    /// degenerate rejection sampling, non-bracketed root, ...
    Numerical(String),
    /// A body file or config file could not be parsed.
    Format(String),
    /// Underlying I/O failure.
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Grid(msg) => write!(f, "grid error: {msg}"),
            Error::Parameter(msg) => write!(f, "parameter error: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::DegenerateConvexity { node, min_b } => write!(
                f,
                "degenerate convexity: h'' + h = {min_b:e} at node {node} is below the floor"
            ),
            Error::Unsupported(msg) => write!(f, "unsupported operation: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Io(err) => write!(f, "i/o error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}
