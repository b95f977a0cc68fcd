use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("probability row for state {state}, input {input} is not stochastic: {reason}")]
    NotStochastic {
        state: usize,
        input: usize,
        reason: String,
    },

    #[error("malformed channel family: {0}")]
    Malformed(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("absolute continuity violated at state {state}, input {input}, output {output}")]
    AbsoluteContinuityViolation {
        state: usize,
        input: usize,
        output: usize,
    },

    /// Two states produce identical output laws for every input.
    #[error("states {s1} and {s2} are indistinguishable for every input")]
    Indistinguishable { s1: usize, s2: usize },

    #[error("degenerate family: averaged Bhattacharyya coefficient equals 1 for states {s1}, {s2}")]
    DegenerateFamily { s1: usize, s2: usize },

    #[error("state {0} out of range")]
    StateOutOfRange(usize),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("codebook needs {needed} stored symbols, budget is {budget}")]
    CapacityOverflow { needed: u128, budget: u128 },

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("need {needed} pilot observations, have {available}")]
    InsufficientPilots { needed: usize, available: usize },

    #[error("all {trials} runs were censored; only FAR <= {bound} can be reported")]
    InsufficientTrials { trials: usize, bound: f64 },

    #[error("target delta {target} nats exceeds the achievable maximum {max}")]
    Infeasible { target: f64, max: f64 },

    #[error("communication channel depends on the state (max row deviation {deviation})")]
    StateDependentComm { deviation: f64 },

    #[error("covariance is not positive semidefinite (min eigenvalue {0})")]
    NotPsd(f64),

    #[error("covariance trace {trace} exceeds power budget {power}")]
    PowerViolation { trace: f64, power: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
