use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex argument/result of the error function kernel.
pub type ComplexValue = Complex64;

fn require(cond: bool, name: &'static str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(name, reason))
    }
}

/// Nonlinear crystal and pump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    /// Pump minus signal group index.
    pub delta_ng_signal: f64,
    /// Pump minus idler group index.
    pub delta_ng_idler: f64,
    pub crystal_length_mm: f64,
    pub pump_wavelength_nm: f64,
    /// Pump spectral uncertainty in rad/ps.
    pub pump_sigma_radps: f64,
    /// Recorded only; phase matching is taken as zeroed at degeneracy.
    #[serde(default)]
    pub poling_period_um: f64,
}

impl SourceParams {
    pub fn validate(&self) -> Result<()> {
        require(
            self.delta_ng_signal.is_finite() && self.delta_ng_idler.is_finite(),
            "delta_ng",
            "group-index differences must be finite",
        )?;
        require(
            self.crystal_length_mm > 0.0 && self.crystal_length_mm.is_finite(),
            "crystal_length_mm",
            "must be > 0",
        )?;
        require(
            self.pump_wavelength_nm > 0.0 && self.pump_wavelength_nm.is_finite(),
            "pump_wavelength_nm",
            "must be > 0",
        )?;
        require(
            self.pump_sigma_radps >= 0.0 && self.pump_sigma_radps.is_finite(),
            "pump_sigma_radps",
            "must be >= 0",
        )
    }
}

/// How a rectangular bandpass is matched to the Gaussian filter model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FilterConvention {
    /// Field transmission drops to one half at the band edges.
    FieldLevel,
    /// Intensity transmission drops to one half at the band edges.
    IntensityLevel,
}

impl FilterConvention {
    pub const BOTH: [FilterConvention; 2] = [FilterConvention::FieldLevel, FilterConvention::IntensityLevel];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterParams {
    pub center_wavelength_nm: f64,
    pub fwhm_nm: f64,
    pub convention: FilterConvention,
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        require(
            self.center_wavelength_nm > 0.0 && self.center_wavelength_nm.is_finite(),
            "center_wavelength_nm",
            "must be > 0",
        )?;
        require(self.fwhm_nm > 0.0 && self.fwhm_nm.is_finite(), "fwhm_nm", "must be > 0")
    }

    pub fn with_convention(mut self, convention: FilterConvention) -> Self {
        self.convention = convention;
        self
    }
}

/// Spectral quantities derived from crystal and filter.
///
/// `sigma_pm` and the normalized `gamma_tilde_*` diverge in the pure
/// extended-phase-matching limit (`gamma_idler == -gamma_signal`) and are
/// `None` there; `r`, `s` and `rho` remain valid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedSpectral {
    pub gamma_signal_ps_per_mm: f64,
    pub gamma_idler_ps_per_mm: f64,
    pub gamma_tilde_signal: Option<f64>,
    pub gamma_tilde_idler: Option<f64>,
    pub sigma_pm_radps: Option<f64>,
    pub r_ps2_inv: f64,
    pub r_p_ps2_inv: f64,
    pub s_ps2_inv: f64,
    pub rho_ps2_inv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub fiber_length_km: f64,
    /// Shared by both polarization modes.
    pub beta2_ps2_per_km: f64,
}

impl ChannelParams {
    pub fn new(fiber_length_km: f64, beta2_ps2_per_km: f64) -> Result<Self> {
        require(
            fiber_length_km >= 0.0 && fiber_length_km.is_finite(),
            "fiber_length_km",
            "must be >= 0",
        )?;
        require(beta2_ps2_per_km.is_finite(), "beta2_ps2_per_km", "must be finite")?;
        Ok(ChannelParams {
            fiber_length_km,
            beta2_ps2_per_km,
        })
    }

    /// Accumulated group-delay dispersion `L * beta2` in ps^2.
    pub fn gdd_ps2(&self) -> f64 {
        self.fiber_length_km * self.beta2_ps2_per_km
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    /// Half-width `T` of the symmetric window `[-T, T]`.
    pub window_half_width_ps: f64,
    /// Beam-splitter reflectivity.
    pub eta: f64,
}

impl DetectionParams {
    pub fn new(window_half_width_ps: f64, eta: f64) -> Result<Self> {
        require(
            window_half_width_ps > 0.0 && window_half_width_ps.is_finite(),
            "window_half_width_ps",
            "must be > 0",
        )?;
        require((0.0..=1.0).contains(&eta), "eta", "must lie in [0, 1]")?;
        Ok(DetectionParams {
            window_half_width_ps,
            eta,
        })
    }
}

/// Sampled coincidence curve: strictly increasing delays and nonnegative values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawCurve")]
pub struct HomCurve {
    tau_ps: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawCurve {
    tau_ps: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawCurve> for HomCurve {
    type Error = Error;
    fn try_from(raw: RawCurve) -> Result<Self> {
        HomCurve::new(raw.tau_ps, raw.values)
    }
}

impl HomCurve {
    pub fn new(tau_ps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if tau_ps.len() != values.len() {
            return Err(Error::invalid(
                "values",
                format!("length {} does not match tau length {}", values.len(), tau_ps.len()),
            ));
        }
        check_grid(&tau_ps)?;
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid(
                "values",
                format!("entry {i} ({}) is negative or not finite", values[i]),
            ));
        }
        Ok(HomCurve { tau_ps, values })
    }

    pub fn tau_ps(&self) -> &[f64] {
        &self.tau_ps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.tau_ps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau_ps.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.tau_ps.iter().copied().zip(self.values.iter().copied())
    }

    /// Multiply every value by `k > 0`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        HomCurve::new(self.tau_ps.clone(), self.values.iter().map(|v| v * k).collect())
    }

    /// Mirror the delay axis, `tau -> -tau`, keeping the grid increasing.
    pub fn reversed(&self) -> Self {
        HomCurve {
            tau_ps: self.tau_ps.iter().rev().map(|t| -t).collect(),
            values: self.values.iter().rev().copied().collect(),
        }
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.tau_ps, self.values)
    }
}

/// Finite and strictly increasing.
pub(crate) fn check_grid(tau_ps: &[f64]) -> Result<()> {
    if let Some(i) = tau_ps.iter().position(|t| !t.is_finite()) {
        return Err(Error::invalid("tau_ps", format!("entry {i} is not finite")));
    }
    if let Some(i) = tau_ps.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "tau_ps",
            format!("grid not strictly increasing at entry {}", i + 1),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_rejects_bad_input() {
        assert!(HomCurve::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(HomCurve::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(HomCurve::new(vec![1.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(HomCurve::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
        assert!(HomCurve::new(vec![0.0, f64::NAN], vec![1.0, 1.0]).is_err());
        assert!(HomCurve::new(vec![], vec![]).unwrap().is_empty());
    }

    #[test]
    fn curve_reverse_mirrors_axis() {
        let c = HomCurve::new(vec![-1.0, 0.5, 2.0], vec![1.0, 2.0, 3.0]).unwrap();
        let r = c.reversed();
        assert_eq!(r.tau_ps(), &[-2.0, -0.5, 1.0]);
        assert_eq!(r.values(), &[3.0, 2.0, 1.0]);
    }

    #[test]
    fn detection_and_channel_domains() {
        assert!(DetectionParams::new(0.0, 0.5).is_err());
        assert!(DetectionParams::new(10.0, 1.1).is_err());
        assert!(DetectionParams::new(10.0, 1.0).is_ok());
        assert!(ChannelParams::new(-1.0, 20.0).is_err());
        assert_eq!(ChannelParams::new(10.0, 21.39).unwrap().gdd_ps2(), 213.9);
    }

    #[test]
    fn curve_deserialize_validates() {
        let bad = r#"{"tau_ps":[1.0,0.0],"values":[1.0,1.0]}"#;
        assert!(serde_json::from_str::<HomCurve>(bad).is_err());
        let good = r#"{"tau_ps":[0.0,1.0],"values":[1.0,1.0]}"#;
        assert_eq!(serde_json::from_str::<HomCurve>(good).unwrap().len(), 2);
    }
}
