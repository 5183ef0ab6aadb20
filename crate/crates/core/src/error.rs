use thiserror::Error;

/// Errors raised by evaluation, search and verification routines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("modulus must be at least 1, got m = {0}")]
    InvalidModulus(i64),

    #[error("multiset must contain at least one element")]
    EmptyMultiset,

    #[error("multiset elements must be nonnegative, got {0}")]
    NegativeElement(i64),

    #[error("K must be nonnegative, got {0}")]
    NegativeK(i64),

    #[error("k = {k} outside the supported range [{lo}, {hi}]")]
    KOutOfRange { k: i64, lo: i64, hi: i64 },

    #[error("element {value} outside the bounded range [0, {hi}]")]
    ElementOutOfRange { value: i64, hi: i64 },

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("arithmetic overflow while evaluating the sum")]
    Overflow,

    #[error("reduction modulo m requires n >= 2; single-element sums are not periodic in a_1")]
    NotPeriodic,

    #[error("expected {expected} elements, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("m = {m} is not divisible by {divisor}, required for n = {n}")]
    Divisibility { n: usize, m: i64, divisor: i64 },

    #[error("m = {0} is odd; the attainment site needs an even modulus")]
    OddModulus(i64),

    #[error("arity n = {n} outside the supported range: {reason}")]
    UnsupportedArity { n: usize, reason: &'static str },

    #[error("mirror pruning is only proven for n = 2, 3 over the full K range")]
    MirrorPruningUnproven,

    #[error("result cache: {0}")]
    Cache(String),

    #[error("inconsistent evaluation: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
