use std::path::Path;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument is outside the operation's domain (negative power,
    /// zero-length horizon, probability out of range, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A grid search could not bracket the feature it was looking for;
    /// the search range must be enlarged.
    #[error("bracket error: {0}")]
    Bracket(String),

    /// An iterative search failed to make progress (e.g. the bisection for
    /// the tangent power on a non-decreasing curve).
    #[error("search error: {0}")]
    Search(String),

    /// The curve fits neither the convex nor the concave-convex shape, so
    /// the thresholds are undefined.
    #[error("classification error: {0}")]
    Classification(String),

    /// A tabulated curve is too coarse to resolve the quantity requested.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A configured work or memory cap would be exceeded.
    #[error("resource cap exceeded: {0}")]
    Resource(String),

    /// The operation is not defined for this curve family.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A data file could not be parsed. `row` is 1-based and counts data
    /// rows (the header is row 0).
    #[error("parse error in {path} at row {row}: {msg}")]
    Parse {
        path: String,
        row: usize,
        msg: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(path: &Path, row: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            row,
            msg: msg.into(),
        }
    }
}
