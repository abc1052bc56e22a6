use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Too many components for an inclusion-exclusion expansion.
    #[error("size error: {n} components exceeds the limit of {max}")]
    Size { n: usize, max: usize },

    /// A numerical procedure could not settle its answer.
    #[error("inconclusive: {message}")]
    Inconclusive {
        message: String,
        /// Root brackets isolated before the procedure gave up.
        brackets: Vec<(f64, f64)>,
    },

    #[error("survival function underflows; largest safe x is {largest_safe_x}")]
    Overflow { largest_safe_x: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The constructive counterexample search exhausted its seeds.
    #[error("counterexample search failed after {} attempts", attempts.len())]
    Search {
        /// Attempted `(x0, b0)` seeds.
        attempts: Vec<(f64, f64)>,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
