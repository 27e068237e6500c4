use serde::{Deserialize, Serialize};

use super::types::HomCurve;
use crate::error::{Error, Result};

/// Dip width and the levels it was measured at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FwhmReport {
    pub fwhm_ps: f64,
    /// Maximum over the scanned range.
    pub baseline: f64,
    pub minimum: f64,
    pub tau_at_minimum_ps: f64,
    pub left_crossing_ps: f64,
    pub right_crossing_ps: f64,
}

/// Full width at half depth of the dip.
///
/// The half level sits midway between the curve maximum and its global
/// minimum. From the minimum the scan walks outward and stops at the first
/// half-level crossing on each side, interpolating linearly between samples,
/// so side lobes further out do not affect the result.
pub fn extract_fwhm(curve: &HomCurve) -> Result<FwhmReport> {
    let (tau, v) = (curve.tau_ps(), curve.values());
    if v.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "FWHM needs at least 5 points, got {}",
            v.len()
        )));
    }
    let (imin, &minimum) = v
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let baseline = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if baseline <= minimum || imin == 0 || imin == v.len() - 1 {
        return Err(Error::NoDip);
    }
    let half = 0.5 * (baseline + minimum);

    let interp = |j: usize, k: usize| {
        let frac = (half - v[j]) / (v[k] - v[j]);
        tau[j] + frac * (tau[k] - tau[j])
    };
    let left = (0..imin)
        .rev()
        .find(|&j| v[j] >= half)
        .map(|j| interp(j + 1, j))
        .ok_or(Error::DipUnresolved { side: "left" })?;
    let right = (imin + 1..v.len())
        .find(|&j| v[j] >= half)
        .map(|j| interp(j - 1, j))
        .ok_or(Error::DipUnresolved { side: "right" })?;

    Ok(FwhmReport {
        fwhm_ps: right - left,
        baseline,
        minimum,
        tau_at_minimum_ps: tau[imin],
        left_crossing_ps: left,
        right_crossing_ps: right,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_dip(rho: f64, shift: f64, scale: f64) -> HomCurve {
        let tau: Vec<f64> = (0..4001).map(|i| shift - 4.0 + 0.002 * f64::from(i)).collect();
        let v = tau
            .iter()
            .map(|t| scale * 0.5 * (1.0 - (-0.5 * rho * (t - shift).powi(2)).exp()))
            .collect();
        HomCurve::new(tau, v).unwrap()
    }

    #[test]
    fn gaussian_dip_width() {
        let rho = 14.53;
        let exact = 2.0 * (2.0 * std::f64::consts::LN_2 / rho).sqrt();
        assert!((exact - 0.618).abs() < 1e-3);
        let r = extract_fwhm(&gaussian_dip(rho, 0.0, 1.0)).unwrap();
        assert!((r.fwhm_ps - exact).abs() < 1e-5, "{}", r.fwhm_ps);
    }

    #[test]
    fn scale_and_shift_invariant() {
        let a = extract_fwhm(&gaussian_dip(14.53, 0.0, 1.0)).unwrap().fwhm_ps;
        let b = extract_fwhm(&gaussian_dip(14.53, 0.0, 3.7e4)).unwrap().fwhm_ps;
        let c = extract_fwhm(&gaussian_dip(14.53, 12.5, 1.0)).unwrap().fwhm_ps;
        assert!((a - b).abs() < 1e-12);
        assert!((a - c).abs() < 1e-9);
    }

    #[test]
    fn failures() {
        let tau: Vec<f64> = (0..10).map(f64::from).collect();
        let flat = HomCurve::new(tau.clone(), vec![1.0; 10]).unwrap();
        assert_eq!(extract_fwhm(&flat), Err(Error::NoDip));
        let mono = HomCurve::new(tau.clone(), tau.clone()).unwrap();
        assert_eq!(extract_fwhm(&mono), Err(Error::NoDip));
        // dip whose right shoulder never recovers to half depth
        let v = vec![1.0, 1.0, 1.0, 0.6, 0.2, 0.0, 0.1, 0.2, 0.3, 0.4];
        let cut = HomCurve::new(tau.clone(), v).unwrap();
        assert_eq!(extract_fwhm(&cut), Err(Error::DipUnresolved { side: "right" }));
        let short = HomCurve::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(extract_fwhm(&short), Err(Error::InsufficientData(_))));
    }
}
