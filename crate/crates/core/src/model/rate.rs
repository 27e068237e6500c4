//! Closed-form coincidence rate inside a symmetric window `[-T, T]`.

use std::f64::consts::PI;

use super::erf::{erf_real, scaled_dip_term};
use super::spectral::{broadened_rho, eta_prime};
use super::types::{check_grid, ChannelParams, DetectionParams, HomCurve};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Validated arguments of [`coincidence_rate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    rho: f64,
    rho_prime: f64,
    eta_prime: f64,
    window_half_width_ps: f64,
}

impl RateParams {
    /// Requires `rho >= rho_prime > 0`, `0 <= eta_prime <= 1`, `T > 0`.
    pub fn new(rho: f64, rho_prime: f64, eta_prime: f64, window_half_width_ps: f64) -> Result<Self> {
        if !(rho_prime > 0.0 && rho_prime.is_finite()) {
            return Err(Error::invalid("rho_prime", "must be > 0"));
        }
        if !(rho >= rho_prime && rho.is_finite()) {
            return Err(Error::invalid("rho", "must be >= rho_prime"));
        }
        if !(0.0..=1.0).contains(&eta_prime) {
            return Err(Error::invalid("eta_prime", "must lie in [0, 1]"));
        }
        if !(window_half_width_ps > 0.0 && window_half_width_ps.is_finite()) {
            return Err(Error::invalid("window_half_width_ps", "must be > 0"));
        }
        Ok(RateParams {
            rho,
            rho_prime,
            eta_prime,
            window_half_width_ps,
        })
    }

    /// From the spectral width, the fiber channel and the detection setup.
    pub fn from_physical(rho: f64, channel: &ChannelParams, detection: &DetectionParams) -> Result<Self> {
        let rho_prime = broadened_rho(rho, channel)?;
        RateParams::new(
            rho,
            rho_prime,
            eta_prime(detection.eta)?,
            detection.window_half_width_ps,
        )
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn rho_prime(&self) -> f64 {
        self.rho_prime
    }

    pub fn eta_prime(&self) -> f64 {
        self.eta_prime
    }

    pub fn window_half_width_ps(&self) -> f64 {
        self.window_half_width_ps
    }

    /// Value far outside the dip but well inside the window,
    /// `(1 + eta') / 2 * erf(sqrt(rho'/2) T)`.
    pub fn plateau(&self) -> f64 {
        0.5 * (1.0 + self.eta_prime) * erf_real((0.5 * self.rho_prime).sqrt() * self.window_half_width_ps)
    }
}

/// Windowed coincidence rate at delay `tau_ps`:
///
/// ```text
/// c(tau) = (1+eta')/4 [erf(a (T+tau)) + erf(a (T-tau))]
///        - (1-eta')/2 exp(-rho tau^2/2) Re erf(a T + i b tau)
/// ```
///
/// with `a = sqrt(rho'/2)` and `b = sqrt((rho-rho')/2)`. The second term is
/// evaluated as `exp(-rho' tau^2/2) * scaled_dip_term(a T, b tau)`, which is
/// the same product regrouped so that no factor overflows.
pub fn coincidence_rate(tau_ps: f64, p: &RateParams) -> f64 {
    let t = p.window_half_width_ps;
    let a = (0.5 * p.rho_prime).sqrt();
    let b = (0.5 * (p.rho - p.rho_prime)).sqrt();

    let envelope = 0.25 * (1.0 + p.eta_prime) * (erf_real(a * (t + tau_ps)) + erf_real(a * (t - tau_ps)));
    let dip =
        0.5 * (1.0 - p.eta_prime) * (-0.5 * p.rho_prime * tau_ps * tau_ps).exp() * scaled_dip_term(a * t, b * tau_ps);
    (envelope - dip).max(0.0)
}

/// [`coincidence_rate`] over a strictly increasing delay grid.
pub fn coincidence_curve(grid_ps: &[f64], p: &RateParams, exec: Execution) -> Result<HomCurve> {
    check_grid(grid_ps)?;
    let values = exec.map(grid_ps, |&tau| coincidence_rate(tau, p));
    HomCurve::new(grid_ps.to_vec(), values)
}

/// Approximate period of the window-induced side lobes,
/// `2 pi / (T sqrt(rho' (rho - rho')))`.
pub fn oscillation_period(rho: f64, rho_prime: f64, window_half_width_ps: f64) -> Result<f64> {
    if !(window_half_width_ps > 0.0 && window_half_width_ps.is_finite()) {
        return Err(Error::invalid("window_half_width_ps", "must be > 0"));
    }
    if !(rho_prime > 0.0) {
        return Err(Error::invalid("rho_prime", "must be > 0"));
    }
    if rho_prime == rho {
        return Err(Error::NoDispersion);
    }
    if !(rho > rho_prime) {
        return Err(Error::invalid("rho", "must exceed rho_prime"));
    }
    Ok(2.0 * PI / (window_half_width_ps * (rho_prime * (rho - rho_prime)).sqrt()))
}
