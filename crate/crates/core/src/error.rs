//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input file violates the documented schema. `location` names the
    /// offending utterance / field so batch runs can report precisely.
    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Calendar search failed (e.g. a day-of-month that never occurs
    /// within the twelve-month search horizon).
    #[error("calendar: {0}")]
    Calendar(String),

    /// Deictic term outside the closed lexicon.
    #[error("unknown deictic term: {0}")]
    UnknownDeictic(String),

    /// Metric has no defined value (zero denominator, degenerate table).
    #[error("undefined metric: {0}")]
    Undefined(&'static str),

    /// Internal invariant violation; maps to a distinct process exit code.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            location: location.into(),
            message: message.into(),
        }
    }
}
