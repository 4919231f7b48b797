use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument outside supported domain: {0}")]
    Domain(String),

    #[error("invalid well geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid drive: {0}")]
    InvalidDrive(String),

    /// The residual has a pole (vanishing denominator) at this energy.
    #[error("residual pole at {at}")]
    Pole { at: Complex64 },

    /// The truncated side-band system could not be factorized.
    #[error("singular side-band system at trial energy {epsilon}")]
    SingularMatrix { epsilon: Complex64 },

    #[error("no convergence after {iterations} iterations (last iterate {last})")]
    NoConvergence { last: Complex64, iterations: usize },

    #[error("root finder converged onto a pole near {at} (|f| = {residual:e})")]
    PoleCaptured { at: Complex64, residual: f64 },

    /// A root with Im(E) > 0 describes growth, not decay.
    #[error("non-physical root {energy} (positive imaginary part)")]
    NonPhysical { energy: Complex64 },

    #[error("gap minimum is not bracketed by three grid points")]
    GridTooCoarse,

    #[error("not found: {0}")]
    NotFound(String),

    #[error("mismatched parameters: {0}")]
    MismatchedParameters(String),

    #[error("poor exponential fit (R^2 = {r_squared:.5})")]
    PoorFit { r_squared: f64 },

    #[error("configuration error: {0}")]
    Config(String),
}
