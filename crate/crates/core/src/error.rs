use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not a supported prime")]
    InvalidPrime(u32),
    #[error("parse error in {input:?} at token {position}: {message}")]
    Parse { input: String, position: usize, message: String },
    #[error("mixed primes: {0} and {1}")]
    MixedPrimes(u32, u32),
    #[error("ill-formed monomial: {0}")]
    IllFormed(String),
    #[error("oracle arity {given} is below the degree {needed}")]
    OracleArity { needed: u32, given: usize },
    #[error("degree {requested} lies outside the computed window (max {available})")]
    Window { requested: u32, available: u32 },
    #[error("unknown Steenrod action: {op} on {class}")]
    UnknownAction { op: String, class: String },
    #[error("spec error: {0}")]
    Spec(String),
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
    #[error("undetermined: {0}")]
    Undetermined(String),
    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: i64, found: i64 },
}

impl Error {
    pub fn parse(input: &str, position: usize, message: impl Into<String>) -> Self {
        Error::Parse { input: input.to_string(), position, message: message.into() }
    }

    /// True for errors meaning a computation could not be completed from the given data.
    pub fn is_aborted(&self) -> bool {
        matches!(
            self,
            Error::UnknownAction { .. } | Error::Undetermined(_) | Error::Window { .. } | Error::Inconsistent(_)
        )
    }
}
