use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate phase matching: both group-delay mismatches are zero")]
    DegeneratePhaseMatching,

    #[error("r undefined (degenerate difference bandwidth): gamma_idler == gamma_signal")]
    DegenerateBandwidth,

    #[error("erf({re} + {im}i) overflows double precision; use scaled_dip_term for the windowed dip")]
    ErfOverflow { re: f64, im: f64 },

    #[error("no oscillations without dispersion (rho_prime == rho)")]
    NoDispersion,

    #[error("no dip found")]
    NoDip,

    #[error("dip not resolved in scan range ({side} half-level crossing missing)")]
    DipUnresolved { side: &'static str },

    #[error("filter narrower than fitted spectrum (rho = {rho} >= s = {s})")]
    FilterTooNarrow { rho: f64, s: f64 },

    #[error("scale undefined: model values are all zero")]
    ScaleUndefined,

    #[error("no valid points (all data values are zero)")]
    NoValidPoints,

    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound}")]
    QuadratureNotConverged { estimate: f64, error_bound: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
