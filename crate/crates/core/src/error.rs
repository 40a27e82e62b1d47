use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("time {0} is not on the declared grid")]
    NonGridTime(f64),
    #[error("reversed interval: {from} > {to}")]
    ReversedInterval { from: f64, to: f64 },
    #[error("temporal support mismatch: {0}")]
    SupportMismatch(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("propositions do not commute (commutator norm {0:.3e}); the operation is undefined")]
    NonCommuting(f64),
    #[error("degenerate conditioning: conditioning probability {0:.3e} is not above tolerance")]
    DegenerateConditioning(f64),
    #[error("set is not closed under conjunction: {0}")]
    NotBooleanClosed(String),
    #[error("sets are not exclusive and exhaustive in the named context: {0}")]
    NotCoExclusive(String),
    #[error("distribution is not normalized (sum {0})")]
    NotNormalized(f64),
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },
    #[error("empty set")]
    EmptySet,
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
