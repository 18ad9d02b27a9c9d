use thiserror::Error;

/// Errors raised by table construction, evaluation and the limit search.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Arguments outside the region where a series or bound is valid.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid construction parameters (truncation order, circle count, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The alternating sum cancelled more digits than the working precision holds.
    #[error("precision fault at u = {u}: cancellation ratio {ratio:e} exceeds working precision")]
    PrecisionFault { u: f64, ratio: f64 },

    /// The method-of-steps integrator could not meet the requested tolerance.
    #[error("tolerance {tol:e} not met (best estimate {achieved:e})")]
    Tolerance { tol: f64, achieved: f64 },

    /// No u in the search bracket gave a main term above its error bound.
    #[error("no crossing for kappa = {kappa} on [{lo}, {hi}]")]
    NoCrossing { kappa: u32, lo: f64, hi: f64 },

    /// A panel kept failing the convergence check after repeated halving.
    #[error("quadrature did not converge on [{a}, {b}] (estimate {achieved:e})")]
    Quadrature { a: f64, b: f64, achieved: f64 },

    #[error("malformed table dump: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
