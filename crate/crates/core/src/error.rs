use thiserror::Error;

/// Errors raised by validation and by the numerical engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("Heisenberg violation: {name} product {product} is below 1/4")]
    HeisenbergViolation { name: &'static str, product: f64 },

    #[error("beta_q = 0 describes a sharp position measurement and requires beta_p = inf")]
    InvalidSharp,

    #[error("energy {energy} is below the vacuum energy 1/2")]
    EnergyBelowVacuum { energy: f64 },

    #[error("squeezing {delta} lies outside the admissible interval [{lo}, {hi}]")]
    OutOfInterval { delta: f64, lo: f64, hi: f64 },

    #[error("the dual ensemble is not defined for a sharp position measurement")]
    InvalidForSharp,

    #[error("{0}")]
    UnsupportedNoise(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("truncation N = {truncation} leaves trace deficit {deficit:e} (tolerance {tolerance:e})")]
    TruncationInsufficient {
        truncation: usize,
        deficit: f64,
        tolerance: f64,
    },

    #[error("output density {value:e} is negative at ({x}, {y}); truncation failure")]
    NegativeDensity { value: f64, x: f64, y: f64 },

    #[error("output density integrates to {mass} on the grid")]
    NormalizationFailure { mass: f64 },

    #[error("mutual information {value:e} is negative beyond tolerance")]
    NegativeInformation { value: f64 },

    #[error("closed form and numeric route disagree by {deviation:e} ({what})")]
    Inconsistent { what: &'static str, deviation: f64 },
}

impl Error {
    /// True for errors caused by invalid user input rather than by numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::NonPositive { .. }
                | Error::HeisenbergViolation { .. }
                | Error::InvalidSharp
                | Error::EnergyBelowVacuum { .. }
                | Error::OutOfInterval { .. }
                | Error::InvalidForSharp
                | Error::UnsupportedNoise(_)
                | Error::InvalidArgument(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
