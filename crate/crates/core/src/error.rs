use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("modulus {0} is not an odd prime below 2^63")]
    InvalidModulus(u64),

    #[error("{what} = {value} is out of range: {expected}")]
    OutOfRange {
        what: &'static str,
        value: u64,
        expected: String,
    },

    #[error("{0} has no multiplicative inverse")]
    NoInverse(u64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// An exact computation produced something the algebra says cannot
    /// happen (nonzero remainder, failed certificate).
    #[error("internal consistency check failed: {0}")]
    Inconsistency(String),

    #[error("work budget exceeded: {needed} operations requested, budget is {budget}")]
    Budget { needed: u128, budget: u64 },

    #[error("{target} is not a product of at most {factors} factorials with arguments <= {bound}")]
    NotRepresentable { target: u64, factors: usize, bound: u64 },
}

impl Error {
    pub(crate) fn range(what: &'static str, value: u64, expected: impl Into<String>) -> Self {
        Error::OutOfRange {
            what,
            value,
            expected: expected.into(),
        }
    }
}
