use thiserror::Error;

/// Errors produced by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed numeric input (non-finite lag, negative step, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or incomplete configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Exponential fit could not be performed.
    #[error("fit error: {0}")]
    Fit(String),

    /// A kernel produced a covariance that cannot be factorized.
    #[error("kernel error: {0}")]
    Kernel(String),

    /// The bath discretization does not reproduce the kernel well enough.
    #[error("discretization quality error: reconstruction error {error:.3e} exceeds {limit:.3e}; try more modes")]
    Discretization { error: f64, limit: f64 },

    /// Time stepping produced non-finite values.
    #[error("integration blow-up at t = {t}: non-finite state")]
    Blowup { t: f64 },

    /// A conserved quantity drifted beyond tolerance.
    #[error("integration accuracy error: {0}")]
    Accuracy(String),

    /// The finite-temperature kernel is not well described by one exponential.
    #[error("model inadequacy: single-exponential fit residual {residual:.3e} exceeds threshold {threshold:.3e} at T = {temperature}; the kernel is not single-exponential at this temperature")]
    ModelInadequacy {
        residual: f64,
        threshold: f64,
        temperature: f64,
    },
}

impl Error {
    /// True for errors caused by the caller's configuration rather than by numerics.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Input(_) | Error::Config(_) | Error::Domain(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
