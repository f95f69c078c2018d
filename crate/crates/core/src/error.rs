use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes do not agree, or a documented precondition was broken.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A rank-one update would make the maintained matrix singular.
    #[error("singular rank-one update (denominator {denominator:e})")]
    SingularUpdate { denominator: f64 },

    #[error("degenerate polynomial: {0}")]
    DegenerateEquation(&'static str),

    /// The shot-noise mean diverges for path-loss exponents at or below 2.
    #[error("path-loss exponent {alpha} <= 2: the interference mean diverges")]
    DivergentMean { alpha: f64 },

    #[error("degenerate interference prior: variance is zero")]
    DegeneratePrior,

    /// A Cholesky factorization met a non-positive pivot.
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    /// Process exit code for this error: 2 for configuration problems,
    /// 3 for numerical failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::DivergentMean { .. } => 2,
            Error::Contract(_)
            | Error::SingularUpdate { .. }
            | Error::DegenerateEquation(_)
            | Error::DegeneratePrior
            | Error::NotPositiveDefinite { .. } => 3,
            Error::Io(_) | Error::Csv(_) => 1,
        }
    }
}
