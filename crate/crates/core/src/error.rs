use thiserror::Error;

/// Errors raised by instance/solution evaluation.
#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("solution kind does not match instance kind")]
    KindMismatch,
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("machine order and job precedence form a cycle")]
    CyclicSchedule,
    #[error("reference objective is zero but value is not")]
    ZeroReference,
    #[error("empty report batch")]
    EmptyBatch,
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

/// Errors raised by grammar construction and parsing.
#[derive(Debug, Error, PartialEq)]
pub enum GrammarError {
    #[error("unsupported kind for grammar construction")]
    UnsupportedKind,
    #[error("grammar is left-recursive via {0}")]
    LeftRecursion(String),
    #[error("undeclared symbol {0} in production for {1}")]
    UndeclaredSymbol(String, String),
    #[error("grammar is not LL(1): conflict on {symbol} at token {token}")]
    NotDeterministic { symbol: String, token: String },
    #[error("token {token:?} not valid at token position {position}")]
    InvalidToken { token: String, position: usize },
    #[error("parse error at byte {offset}, token position {position}: {detail}")]
    Parse {
        offset: usize,
        position: usize,
        detail: String,
    },
}

/// Errors raised while decoding from a policy.
#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("policy produced a non-finite logit for token {0}")]
    PolicyFailure(String),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

/// Errors raised by the sampling calculators and the adaptive loop.
#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("need at least two samples")]
    TooFewSamples,
    #[error("best solution is not among the samples")]
    BestNotInSamples,
    #[error("argument outside its open-interval domain")]
    DomainError,
    #[error("distribution weights are invalid: {0}")]
    InvalidDistribution(String),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Errors raised by the preference-learning module.
#[derive(Debug, Error, PartialEq)]
pub enum BopoError {
    #[error("preference batch is empty")]
    EmptyBatch,
    #[error("beta must be positive")]
    InvalidBeta,
}

/// Errors raised by the exhaustive reference solvers.
#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("instance exceeds the brute-force size cap")]
    TooLarge,
    #[error(transparent)]
    Problem(#[from] ProblemError),
}
