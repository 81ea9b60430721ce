use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("atom at time {time} lies outside [0, {horizon}]")]
    AtomOutsideHorizon { time: f64, horizon: f64 },

    #[error("invalid atom: {0}")]
    InvalidAtom(String),

    #[error("atom index {index} out of range for configuration with {len} atoms")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample count must be positive ({0})")]
    ZeroSamples(&'static str),

    #[error("difference order {order} exceeds configured maximum {max}")]
    OrderTooLarge { order: usize, max: usize },

    #[error("multiple integrals of order {0} are not supported (max 3)")]
    UnsupportedOrder(usize),

    #[error("quadrature did not converge on [{lo}, {hi}]: error estimate {estimate:e} after {intervals} subintervals")]
    Quadrature {
        lo: f64,
        hi: f64,
        estimate: f64,
        intervals: usize,
    },

    #[error("unknown functional `{0}`")]
    UnknownFunctional(String),
}

pub type Result<T> = std::result::Result<T, Error>;
