use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("model is not stationary (spectral radius {spectral_radius:.6})")]
    NonStationary { spectral_radius: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("insufficient data: need at least {needed} rows, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Coordinate descent hit its sweep cap. Carries the last iterate so callers can inspect it.
    #[error("coordinate descent did not converge after {sweeps} sweeps (KKT residual {kkt_residual:.3e})")]
    NonConvergence {
        sweeps: usize,
        kkt_residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("degenerate fourth moment: V_hat = {0:.3e}; the test statistic is undefined")]
    DegenerateMoments(f64),

    #[error("no lag candidate produced a finite BIC")]
    NoFiniteBic,

    #[error("could not draw a stationary perturbation within {0} attempts")]
    RetryBudgetExhausted(usize),
}

impl Error {
    /// True for failures of the numerical routines rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::DegenerateMoments(_) | Error::NoFiniteBic
        )
    }
}
