use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {function}: {reason}")]
    Domain { function: &'static str, reason: String },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("root finder failed: {0}")]
    RootFinding(String),

    #[error("quadrature did not converge on [{lower}, {upper}] (estimated error {error:e})")]
    Quadrature { lower: f64, upper: f64, error: f64 },

    #[error("quadrature failed at t = {time}: {source}")]
    QuadratureAtTime {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(
        "the Lorentzian spectral density is nonzero at zero frequency; \
         the thermal integral diverges for T = {temperature} > 0"
    )]
    InfraredDivergence { temperature: f64 },

    #[error("time grid too coarse: envelope changes by {jump} between t = {time} and the next point")]
    GridTooCoarse { time: f64, jump: f64 },

    #[error("trajectory {index} became unstable at t = {time} (P = {value})")]
    Unstable { index: u64, time: f64, value: f64 },

    #[error("{failed} of {total} trajectories failed, above the 1% tolerance")]
    TooManyFailures { failed: usize, total: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed table: {0}")]
    Table(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { field, reason: reason.into() }
}
