use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch: {values} values but {probs} probabilities")]
    LengthMismatch { values: usize, probs: usize },

    #[error("negative probability {0} at index {1}")]
    NegativeProbability(f64, usize),

    #[error("non-finite value at index {0}")]
    NonFiniteValue(usize),

    #[error("probabilities sum to {0}, expected 1")]
    MassNotOne(f64),

    #[error("empty support")]
    EmptySupport,

    #[error("invalid truncation bounds: lower {lower} > upper {upper}")]
    InvalidBounds { lower: f64, upper: f64 },

    #[error("invalid integration interval ({a}, {b})")]
    InvalidInterval { a: f64, b: f64 },

    #[error("level {0} is outside the open interval (0, 1)")]
    InvalidLevel(f64),

    #[error("discretization step must be positive, got {0}")]
    InvalidDelta(f64),

    #[error("{0} outcomes exceed the enumeration limit of {1}")]
    TooManyOutcomes(usize, usize),

    #[error("unknown variable `{0}`")]
    MissingVariable(String),

    #[error("variable `{label}` has {got} values, space has {expected} outcomes")]
    VariableLength {
        label: String,
        got: usize,
        expected: usize,
    },

    #[error("non-positive outcome probability {0} at index {1}")]
    NonPositiveOutcome(f64, usize),

    #[error("measure and distribution are defined over different bases")]
    BaseMismatch,

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("truncation search exhausted without a witness")]
    SearchExhausted,
}
