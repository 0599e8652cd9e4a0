use thiserror::Error;

/// Errors raised by the simulation and estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("Lerch transcendent pole: a = {0} is a non-positive integer")]
    LerchPole(f64),

    #[error("Matsubara resonance: beta*Omega/(2*pi) = {ratio} is within tolerance of integer {n}")]
    MatsubaraResonance { ratio: f64, n: u64 },

    #[error("unstable parameters: characteristic root {re} + {im}i has non-negative real part")]
    Unstable { re: f64, im: f64 },

    #[error("unsupported regime: {0}")]
    Unsupported(String),

    #[error("tolerance not met: requested {requested:e}, achieved {achieved:e}")]
    Tolerance { requested: f64, achieved: f64 },

    #[error("pure-state-limit ill-conditioning: relative purity derivative {residual:e} at a pure state")]
    IllConditioned { residual: f64 },

    #[error("covariance violates the uncertainty relation: det = {det}")]
    Unphysical { det: f64 },

    #[error("steady state not reached: drift {drift:e} at t = {t}")]
    NotStationary { drift: f64, t: f64 },

    #[error("bath recurrence: horizon {horizon} exceeds 0.8 x recurrence time {recurrence}")]
    Recurrence { horizon: f64, recurrence: f64 },

    #[error("matrix exponential check failed: symplectic residual {0:e}")]
    Symplectic(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and positive",
        })
    }
}
