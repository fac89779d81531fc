use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Error type shared by all core modules.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Bad configuration value (dimensions, resolutions, weights, ...).
    Config(String),
    /// A query or window left the terrain extent.
    OutOfBounds(String),
    /// Shape mismatch between data and network weights.
    Shape(String),
    /// Not enough stochastic passes / samples for the requested statistic.
    InsufficientSamples(String),
    /// Malformed serialized data (weight files, datasets).
    Parse(String),
    /// Numerical failure (non-finite loss, all-infinite planning costs).
    Numeric(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(m) => write!(f, "configuration error: {m}"),
            Error::OutOfBounds(m) => write!(f, "out of bounds: {m}"),
            Error::Shape(m) => write!(f, "shape mismatch: {m}"),
            Error::InsufficientSamples(m) => write!(f, "insufficient samples: {m}"),
            Error::Parse(m) => write!(f, "parse error: {m}"),
            Error::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}
