use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Two coinciding candidate average rewards `μ_k / n` (1-based arm and divisor).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DuplicateAverage {
    pub first: (usize, usize),
    pub second: (usize, usize),
    pub value: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "instance violates the distinct-average assumption: mu_{}/{} and mu_{}/{} both equal {}",
        .0.first.0, .0.first.1, .0.second.0, .0.second.1, .0.value
    )]
    AssumptionViolation(DuplicateAverage),

    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),

    #[error("no interior symmetric mixed equilibrium on the given support")]
    NoInteriorSolution,

    #[error("support mismatch: arm {arm} outside the support pays {payoff} > {common}")]
    SupportMismatch { arm: usize, payoff: f64, common: f64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
