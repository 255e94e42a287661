use thiserror::Error;

/// Failures raised by the model, solvers and simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature failed to reach tolerance {tolerance:e} (error estimate {estimate:e})")]
    QuadratureFailure { tolerance: f64, estimate: f64 },

    #[error("linear system is numerically singular (pivot {pivot:e})")]
    SingularSystem { pivot: f64 },

    #[error("Laplace inversion unstable at t = {t}: successive orders differ by {oscillation:e}")]
    InversionUnstable { t: f64, oscillation: f64 },

    #[error("simulation exceeded {limit} working periods without absorption")]
    SimulationOverrun { limit: u64 },
}

impl Error {
    /// True for failures of a numerical method rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureFailure { .. }
                | Error::SingularSystem { .. }
                | Error::InversionUnstable { .. }
                | Error::SimulationOverrun { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
