use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("series did not converge within {iterations} terms")]
    NoConvergence { iterations: usize },

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("singular argument: {0}")]
    Singular(String),

    #[error("invalid dressed index pair: {0}")]
    IndexPair(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error(
        "initial state reaches excitation {excitation}, above the path-sum limit {limit}; \
         use the oracle integrator instead"
    )]
    ExcitationLimit { excitation: usize, limit: usize },

    #[error("coherent amplitude {alpha} exceeds the supported maximum {max}")]
    CutoffOverflow { alpha: f64, max: f64 },

    #[error("grid spacing {spacing} exceeds the stable step {max_step} and substepping is disabled")]
    StepSize { spacing: f64, max_step: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
