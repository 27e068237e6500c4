//! Closed-form model: domain types, spectral derivation, the complex error
//! function kernel, the windowed coincidence rate and curve analyzers.

mod analysis;
pub mod erf;
mod rate;
mod spectral;
pub(crate) mod types;

pub use analysis::{extract_fwhm, FwhmReport};
pub use erf::{erf_complex, erf_real, scaled_dip_term};
pub use rate::{coincidence_curve, coincidence_rate, oscillation_period, RateParams};
pub use spectral::{
    broadened_rho, check_epm, derive_gammas, derive_spectral, eta_prime, filter_variance, group_index_bounds, EpmCheck,
    GroupIndexBounds, DEFAULT_EPM_REL_TOL,
};
pub use types::{
    ChannelParams, ComplexValue, DerivedSpectral, DetectionParams, FilterConvention, FilterParams, HomCurve,
    SourceParams,
};

/// Vacuum speed of light in mm/ps.
pub const SPEED_OF_LIGHT_MM_PER_PS: f64 = 0.299_792_458;

/// Vacuum speed of light in nm/ps.
pub const SPEED_OF_LIGHT_NM_PER_PS: f64 = 299_792.458;
