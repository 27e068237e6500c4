//! Global least-squares fitting of the closed-form model to many datasets.
//!
//! `beta2` and `rho` are shared; every dataset has its own reflectivity
//! `eta_i` and a scale `s_i` that is never a free parameter: it is profiled
//! out in closed form at every evaluation, so the loss only sees the shape
//! of each curve.

mod lm;

use serde::{Deserialize, Serialize};

pub use lm::{lm_fit, FitOptions, FitResult, Weighting};

use crate::error::{Error, Result};
use crate::exec::{pairwise_sum, pairwise_sum_by, Execution};
use crate::model::{coincidence_rate, ChannelParams, DetectionParams, HomCurve, RateParams};

/// One measured or synthetic coincidence curve plus its configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub curve: HomCurve,
    pub window_half_width_ps: f64,
    pub fiber_length_km: f64,
    pub label: String,
}

impl Dataset {
    pub fn new(
        curve: HomCurve,
        window_half_width_ps: f64,
        fiber_length_km: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !(window_half_width_ps > 0.0 && window_half_width_ps.is_finite()) {
            return Err(Error::invalid("window_half_width_ps", "must be > 0"));
        }
        if !(fiber_length_km >= 0.0 && fiber_length_km.is_finite()) {
            return Err(Error::invalid("fiber_length_km", "must be >= 0"));
        }
        Ok(Dataset {
            curve,
            window_half_width_ps,
            fiber_length_km,
            label: label.into(),
        })
    }

    /// Model parameters for this dataset at the given shared values.
    pub fn rate_params(&self, beta2_ps2_per_km: f64, rho_ps2_inv: f64, eta: f64) -> Result<RateParams> {
        let channel = ChannelParams::new(self.fiber_length_km, beta2_ps2_per_km)?;
        let detection = DetectionParams::new(self.window_half_width_ps, eta)?;
        RateParams::from_physical(rho_ps2_inv, &channel, &detection)
    }

    /// Unscaled model values on this dataset's delay grid.
    pub fn model_values(&self, beta2_ps2_per_km: f64, rho_ps2_inv: f64, eta: f64) -> Result<Vec<f64>> {
        let p = self.rate_params(beta2_ps2_per_km, rho_ps2_inv, eta)?;
        Ok(self.curve.tau_ps().iter().map(|&t| coincidence_rate(t, &p)).collect())
    }
}

/// Shared and per-dataset model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub beta2_ps2_per_km: f64,
    pub rho_ps2_inv: f64,
    /// One reflectivity per dataset, reported in `[1/2, 1]`.
    pub etas: Vec<f64>,
}

impl FitParams {
    pub fn validate(&self, datasets: usize) -> Result<()> {
        if !(self.rho_ps2_inv > 0.0 && self.rho_ps2_inv.is_finite()) {
            return Err(Error::invalid("rho_ps2_inv", "must be > 0"));
        }
        if !self.beta2_ps2_per_km.is_finite() {
            return Err(Error::invalid("beta2_ps2_per_km", "must be finite"));
        }
        if self.etas.len() != datasets {
            return Err(Error::invalid(
                "etas",
                format!("{} values for {} datasets", self.etas.len(), datasets),
            ));
        }
        if self.etas.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::invalid("etas", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Maps every `eta < 1/2` to `1 - eta`; the model only sees `(2 eta - 1)^2`.
    pub fn canonicalized(mut self) -> Self {
        for e in &mut self.etas {
            if *e < 0.5 {
                *e = 1.0 - *e;
            }
        }
        self
    }
}

/// Closed-form scale minimizing `sum (s f - y)^2`: `sum(f y) / sum(f^2)`.
pub fn profile_scale(model_values: &[f64], data_values: &[f64]) -> Result<f64> {
    let n = model_values.len().min(data_values.len());
    let ff = pairwise_sum_by(n, |i| model_values[i] * model_values[i]);
    if ff == 0.0 {
        return Err(Error::ScaleUndefined);
    }
    let fy = pairwise_sum_by(n, |i| model_values[i] * data_values[i]);
    Ok(fy / ff)
}

/// Weighted variant, minimizing `sum w (s f - y)^2`.
pub fn profile_scale_weighted(model_values: &[f64], data_values: &[f64], weights: &[f64]) -> Result<f64> {
    let n = model_values.len().min(data_values.len()).min(weights.len());
    let ff = pairwise_sum_by(n, |i| weights[i] * model_values[i] * model_values[i]);
    if ff == 0.0 {
        return Err(Error::ScaleUndefined);
    }
    let fy = pairwise_sum_by(n, |i| weights[i] * model_values[i] * data_values[i]);
    Ok(fy / ff)
}

/// Scale-agnostic loss over all datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Loss {
    pub total: f64,
    /// Per dataset, `s_i f(x) - y_x` with the profiled `s_i`.
    pub residuals: Vec<Vec<f64>>,
    pub scales: Vec<f64>,
}

/// Profiled residuals of one dataset.
pub(crate) fn dataset_residuals(ds: &Dataset, beta2: f64, rho: f64, eta: f64) -> Result<(f64, Vec<f64>)> {
    let f = ds.model_values(beta2, rho, eta)?;
    let y = ds.curve.values();
    let s = profile_scale(&f, y)?;
    Ok((s, f.iter().zip(y).map(|(fi, yi)| s * fi - yi).collect()))
}

/// `E = sum_i sum_x (s_i0 f_i(x) - y_x)^2`, with every `s_i0` recomputed.
pub fn global_loss(params: &FitParams, datasets: &[Dataset], exec: Execution) -> Result<Loss> {
    params.validate(datasets.len())?;
    let per: Result<Vec<(f64, Vec<f64>)>> = exec
        .map_range(datasets.len(), |i| {
            dataset_residuals(
                &datasets[i],
                params.beta2_ps2_per_km,
                params.rho_ps2_inv,
                params.etas[i],
            )
        })
        .into_iter()
        .collect();
    let per = per?;
    let sums: Vec<f64> = per
        .iter()
        .map(|(_, r)| pairwise_sum_by(r.len(), |k| r[k] * r[k]))
        .collect();
    let (scales, residuals) = per.into_iter().unzip();
    Ok(Loss {
        total: pairwise_sum(&sums),
        residuals,
        scales,
    })
}

/// Root mean square relative error of one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rmsre {
    pub value: f64,
    pub used_points: usize,
    /// Bins with zero counts, which cannot enter a relative error.
    pub excluded_zero_bins: usize,
}

/// `sqrt(sum_x (r_x / y_x)^2 / N)` over bins with `y_x > 0`.
pub fn rmsre(residuals: &[f64], data_values: &[f64]) -> Result<Rmsre> {
    let rel: Vec<f64> = residuals
        .iter()
        .zip(data_values)
        .filter(|(_, &y)| y > 0.0)
        .map(|(r, y)| (r / y) * (r / y))
        .collect();
    let n = residuals.len().min(data_values.len());
    if rel.is_empty() {
        return Err(Error::NoValidPoints);
    }
    Ok(Rmsre {
        value: (pairwise_sum(&rel) / rel.len() as f64).sqrt(),
        used_points: rel.len(),
        excluded_zero_bins: n - rel.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_basics() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(profile_scale(&y, &y).unwrap(), 1.0);
        let f: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
        assert_eq!(profile_scale(&f, &y).unwrap(), 0.5);
        assert_eq!(profile_scale(&[0.0; 3], &y), Err(Error::ScaleUndefined));
        let w = [1.0, 4.0, 0.5];
        assert!((profile_scale_weighted(&f, &y, &w).unwrap() - 0.5).abs() < 1e-15);
    }

    /// Golden-section search on the quadratic, independent of the closed form.
    fn golden_min(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        for _ in 0..200 {
            if g(c) < g(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - phi * (b - a);
            d = a + phi * (b - a);
        }
        0.5 * (a + b)
    }

    #[test]
    fn scale_matches_golden_section() {
        let mut state = 0x2545_f491_4f6c_dd1d_u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let f: Vec<f64> = (0..50).map(|_| next()).collect();
            let y: Vec<f64> = (0..50).map(|_| 3.0 * next()).collect();
            let s = profile_scale(&f, &y).unwrap();
            let loss = |t: f64| f.iter().zip(&y).map(|(a, b)| (t * a - b).powi(2)).sum::<f64>();
            let g = golden_min(loss, -10.0, 10.0);
            // a bracketing search only resolves a quadratic minimum to ~sqrt(eps)
            assert!((s - g).abs() <= 1e-7 * s.abs().max(1.0), "{s} vs {g}");
        }
    }

    #[test]
    fn rmsre_values() {
        let y = [10.0, 20.0, 0.0, 5.0];
        let r0 = rmsre(&[0.0; 4], &y).unwrap();
        assert_eq!(r0.value, 0.0);
        assert_eq!(r0.excluded_zero_bins, 1);
        assert_eq!(r0.used_points, 3);
        let r: Vec<f64> = y.iter().map(|v| 0.1 * v).collect();
        assert!((rmsre(&r, &y).unwrap().value - 0.1).abs() < 1e-15);
        assert_eq!(rmsre(&[1.0, 1.0], &[0.0, 0.0]), Err(Error::NoValidPoints));
    }

    #[test]
    fn empty_loss_is_zero() {
        let p = FitParams {
            beta2_ps2_per_km: 20.0,
            rho_ps2_inv: 14.0,
            etas: vec![],
        };
        assert_eq!(global_loss(&p, &[], Execution::default()).unwrap().total, 0.0);
    }

    #[test]
    fn canonical_etas() {
        let p = FitParams {
            beta2_ps2_per_km: 1.0,
            rho_ps2_inv: 1.0,
            etas: vec![0.2, 0.5, 0.9],
        }
        .canonicalized();
        assert_eq!(p.etas, vec![0.8, 0.5, 0.9]);
    }
}
