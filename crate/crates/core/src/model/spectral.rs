//! Crystal-to-spectrum derivation chain and related parameter maps.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use super::types::{ChannelParams, DerivedSpectral, FilterConvention, FilterParams, SourceParams};
use super::{SPEED_OF_LIGHT_MM_PER_PS, SPEED_OF_LIGHT_NM_PER_PS};
use crate::error::{Error, Result};

/// Mismatch tolerance used for extended-phase-matching warnings. The
/// reference ppKTP crystal sits near 0.12 and is still treated as matched.
pub const DEFAULT_EPM_REL_TOL: f64 = 0.15;

/// Group-delay mismatches `gamma_a = delta_ng_a / c` in ps/mm, as
/// `(signal, idler)`.
pub fn derive_gammas(source: &SourceParams) -> (f64, f64) {
    (
        source.delta_ng_signal / SPEED_OF_LIGHT_MM_PER_PS,
        source.delta_ng_idler / SPEED_OF_LIGHT_MM_PER_PS,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpmCheck {
    /// `|gamma_i + gamma_s| / max(|gamma_i|, |gamma_s|)`, in `[0, 2]`.
    pub mismatch: f64,
    pub satisfied: bool,
}

/// How closely `gamma_idler ~ -gamma_signal` holds.
pub fn check_epm(gamma_signal: f64, gamma_idler: f64, rel_tol: f64) -> Result<EpmCheck> {
    if !(rel_tol > 0.0) {
        return Err(Error::invalid("rel_tol", "must be > 0"));
    }
    let scale = gamma_signal.abs().max(gamma_idler.abs());
    if scale == 0.0 {
        return Err(Error::DegeneratePhaseMatching);
    }
    let mismatch = (gamma_idler + gamma_signal).abs() / scale;
    Ok(EpmCheck {
        mismatch,
        satisfied: mismatch <= rel_tol,
    })
}

/// Gaussian filter variance `s` (ps^-2) matched to a rectangular bandpass of
/// the given FWHM.
pub fn filter_variance(filter: &FilterParams) -> Result<f64> {
    filter.validate()?;
    let lambda = filter.center_wavelength_nm;
    let d_omega = 2.0 * PI * SPEED_OF_LIGHT_NM_PER_PS * filter.fwhm_nm / (lambda * lambda);
    let s = match filter.convention {
        FilterConvention::FieldLevel => d_omega * d_omega / (8.0 * LN_2),
        FilterConvention::IntensityLevel => d_omega * d_omega / (4.0 * LN_2),
    };
    Ok(s)
}

/// Difference-frequency variance scale `r = 24 / ((gamma_i - gamma_s) d)^2`.
fn difference_variance(gamma_signal: f64, gamma_idler: f64, crystal_length_mm: f64) -> Result<f64> {
    let width = (gamma_idler - gamma_signal) * crystal_length_mm;
    if width == 0.0 {
        return Err(Error::DegenerateBandwidth);
    }
    Ok(24.0 / (width * width))
}

fn harmonic(r: f64, s: f64) -> f64 {
    // 1/rho = 1/r + 1/s, with s = inf meaning "no filter"
    if s.is_infinite() {
        r
    } else {
        r * s / (r + s)
    }
}

pub fn derive_spectral(source: &SourceParams, filter: &FilterParams) -> Result<DerivedSpectral> {
    source.validate()?;
    let s = filter_variance(filter)?;
    let (gs, gi) = derive_gammas(source);
    let d = source.crystal_length_mm;
    let r = difference_variance(gs, gi, d)?;

    let sum = gi + gs;
    let (sigma_pm, tilde_s, tilde_i) = if sum == 0.0 {
        (None, None, None)
    } else {
        (
            Some(4.0 * 6f64.sqrt() / (sum * d)),
            Some(2.0 * gs / sum),
            Some(2.0 * gi / sum),
        )
    };

    Ok(DerivedSpectral {
        gamma_signal_ps_per_mm: gs,
        gamma_idler_ps_per_mm: gi,
        gamma_tilde_signal: tilde_s,
        gamma_tilde_idler: tilde_i,
        sigma_pm_radps: sigma_pm,
        r_ps2_inv: r,
        r_p_ps2_inv: source.pump_sigma_radps * source.pump_sigma_radps / 4.0,
        s_ps2_inv: s,
        rho_ps2_inv: harmonic(r, s),
    })
}

/// Width parameter after dispersive broadening, `rho / (1 + (L beta2 rho)^2)`.
pub fn broadened_rho(rho: f64, channel: &ChannelParams) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid("rho", "must be > 0"));
    }
    let chirp = channel.gdd_ps2() * rho;
    Ok(rho / (1.0 + chirp * chirp))
}

/// Beam-splitter constant `(2 eta - 1)^2`, symmetric about one half.
pub fn eta_prime(eta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid("eta", "must lie in [0, 1]"));
    }
    let d = 2.0 * eta - 1.0;
    Ok(d * d)
}

/// `|delta_ng|` estimates from a fitted `rho`, one per filter convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupIndexBounds {
    pub field_level: f64,
    pub intensity_level: f64,
    pub low: f64,
    pub high: f64,
}

/// Inverts `1/rho = 1/r + 1/s` for `r`, then `|gamma_i - gamma_s| =
/// sqrt(24/r)/d` and `|delta_ng| = c |gamma_i - gamma_s| / 2` assuming the
/// symmetric matching `gamma_i = -gamma_s`.
pub fn group_index_bounds(rho: f64, filter: &FilterParams, crystal_length_mm: f64) -> Result<GroupIndexBounds> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid("rho", "must be > 0"));
    }
    if !(crystal_length_mm > 0.0) {
        return Err(Error::invalid("crystal_length_mm", "must be > 0"));
    }
    let estimate = |convention| -> Result<f64> {
        let s = filter_variance(&filter.with_convention(convention))?;
        if rho >= s {
            return Err(Error::FilterTooNarrow { rho, s });
        }
        // 1/r = 1/rho - 1/s
        let inv_r = 1.0 / rho - 1.0 / s;
        let gamma_diff = (24.0 * inv_r).sqrt() / crystal_length_mm;
        Ok(SPEED_OF_LIGHT_MM_PER_PS * gamma_diff / 2.0)
    };
    let field_level = estimate(FilterConvention::FieldLevel)?;
    let intensity_level = estimate(FilterConvention::IntensityLevel)?;
    Ok(GroupIndexBounds {
        field_level,
        intensity_level,
        low: field_level.min(intensity_level),
        high: field_level.max(intensity_level),
    })
}
