//! JSON shapes read and written by the CLI. Every numeric key carries its
//! unit as a suffix.

use serde::{Deserialize, Serialize};

use disphom::model::{DerivedSpectral, FilterParams, SourceParams};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeriveConfig {
    pub source: SourceParams,
    pub filter: FilterParams,
    #[serde(default)]
    pub epm_rel_tol_dimensionless: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct DerivedReport {
    pub gamma_signal_ps_per_mm: f64,
    pub gamma_idler_ps_per_mm: f64,
    pub gamma_tilde_signal_dimensionless: Option<f64>,
    pub gamma_tilde_idler_dimensionless: Option<f64>,
    pub sigma_pm_radps: Option<f64>,
    pub r_ps2_inv: f64,
    pub r_p_ps2_inv: f64,
    pub s_ps2_inv: f64,
    pub rho_ps2_inv: f64,
}

impl From<DerivedSpectral> for DerivedReport {
    fn from(d: DerivedSpectral) -> Self {
        DerivedReport {
            gamma_signal_ps_per_mm: d.gamma_signal_ps_per_mm,
            gamma_idler_ps_per_mm: d.gamma_idler_ps_per_mm,
            gamma_tilde_signal_dimensionless: d.gamma_tilde_signal,
            gamma_tilde_idler_dimensionless: d.gamma_tilde_idler,
            sigma_pm_radps: d.sigma_pm_radps,
            r_ps2_inv: d.r_ps2_inv,
            r_p_ps2_inv: d.r_p_ps2_inv,
            s_ps2_inv: d.s_ps2_inv,
            rho_ps2_inv: d.rho_ps2_inv,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct EpmReport {
    pub mismatch_dimensionless: f64,
    pub rel_tol_dimensionless: f64,
    pub satisfied: bool,
}

#[derive(Debug, Serialize)]
pub struct DeriveReport {
    pub epm: EpmReport,
    pub field_level: DerivedReport,
    pub intensity_level: DerivedReport,
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub max_scale_matched_deviation_dimensionless: f64,
    pub tau_at_max_deviation_ps: f64,
    pub scale_dimensionless: f64,
    pub rel_tol_dimensionless: f64,
    pub abs_tol_dimensionless: f64,
    pub points_count: usize,
}

#[derive(Debug, Serialize)]
pub struct FwhmJson {
    pub fwhm_ps: f64,
    pub baseline_counts: f64,
    pub minimum_counts: f64,
    pub tau_at_minimum_ps: f64,
    pub left_crossing_ps: f64,
    pub right_crossing_ps: f64,
}

#[derive(Debug, Serialize)]
pub struct OscillationReport {
    pub oscillation_period_ps: f64,
    pub rho_ps2_inv: f64,
    pub rho_prime_ps2_inv: f64,
    pub window_half_width_ps: f64,
}

#[derive(Debug, Serialize)]
pub struct GenReport {
    pub datasets_count: usize,
    pub truth_rho_ps2_inv: f64,
    pub files: Vec<String>,
}

/// Reflectivity start values: one for all datasets or one per dataset.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum EtaInit {
    Global(f64),
    PerDataset(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitInit {
    pub beta2_ps2_per_km: f64,
    pub rho_ps2_inv: f64,
    pub eta_dimensionless: EtaInit,
}

#[derive(Debug, Serialize)]
pub struct DatasetFitReport {
    pub file: String,
    pub sha256: String,
    pub label: String,
    pub fiber_length_km: f64,
    pub window_half_width_ps: f64,
    pub points_count: usize,
    pub eta_dimensionless: f64,
    pub eta_sigma_dimensionless: f64,
    pub scale_counts: f64,
    pub rmsre_dimensionless: Option<f64>,
    pub rmsre_points_count: Option<usize>,
    pub excluded_zero_bins_count: Option<usize>,
    pub fitted_fwhm_ps: Option<f64>,
    pub oscillation_period_ps: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct FitReport {
    pub converged: bool,
    pub singular: bool,
    pub iterations_count: usize,
    pub points_count: usize,
    pub free_parameters_count: usize,
    pub beta2_ps2_per_km: f64,
    pub beta2_sigma_ps2_per_km: f64,
    pub rho_ps2_inv: f64,
    pub rho_sigma_ps2_inv: f64,
    pub loss_counts2: f64,
    pub loss_history_counts2: Vec<f64>,
    pub condition_number_dimensionless: f64,
    /// Row and column names for `covariance_in_axis_units`.
    pub covariance_axes: Vec<String>,
    pub covariance_in_axis_units: Vec<Vec<f64>>,
    pub weighting: String,
    pub init_sha256: String,
    pub datasets: Vec<DatasetFitReport>,
    pub tool_version: String,
}
