use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid ansatz: {0}")]
    Spec(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge on [{lo}, {hi}] (error estimate {err:e})")]
    Quadrature { lo: f64, hi: f64, err: f64 },

    #[error("no zero of y up to r_max = {r_max:e} (y(r_max) = {y_end:e})")]
    NoZeroFound { r_max: f64, y_end: f64 },

    #[error("step size underflow at t = {t:e} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("maximum number of steps ({0}) exceeded")]
    TooManySteps(usize),

    #[error("integrity violation: {0}")]
    Integrity(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit did not converge after {iterations} iterations (cost {cost:e})")]
    FitNonConvergence { iterations: usize, cost: f64 },

    #[error("degenerate scaling law: 2(k+l)+1 = 0")]
    DegenerateLaw,

    #[error("{0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
