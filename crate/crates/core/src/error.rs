use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a primitive.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A probability vector, matrix or parameter failed validation.
    #[error("invalid {field}: {detail}")]
    InvalidInput { field: &'static str, detail: String },

    /// The normalization equation could not be bracketed.
    #[error("could not bracket the normalization root for state {state}: {detail}")]
    BracketFailure { state: usize, detail: String },

    /// `single-required` tie rule met more than one payoff maximizer.
    #[error("state {state} has {count} tied payoff maximizers outside the reference support")]
    AmbiguousTie { state: usize, count: usize },

    /// Common support is empty at alpha >= 1, so the information cost is infinite.
    #[error("choice rule has infinite alpha-information (empty common support)")]
    InfiniteInformation,

    #[error("oracle size limit exceeded: {detail}")]
    OracleTooLarge { detail: String },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidInput {
            field,
            detail: detail.into(),
        }
    }

    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }
}
