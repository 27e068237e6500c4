//! Seeded synthetic measurement campaigns with Poisson counting noise.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fitting::Dataset;
use crate::io::PS_PER_NS;
use crate::model::{
    coincidence_curve, derive_spectral, ChannelParams, DetectionParams, FilterParams, HomCurve, RateParams,
    SourceParams,
};

/// Delay scan, in ps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauGrid {
    pub min_ps: f64,
    pub max_ps: f64,
    pub points: usize,
}

impl TauGrid {
    /// `[-1.5 T, 1.5 T]` with 201 points.
    pub fn default_for_window(window_half_width_ps: f64) -> Self {
        TauGrid {
            min_ps: -1.5 * window_half_width_ps,
            max_ps: 1.5 * window_half_width_ps,
            points: 201,
        }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points < 2 || !(self.max_ps > self.min_ps) {
            return Err(Error::invalid("tau_grid", "need >= 2 points and max > min"));
        }
        let step = (self.max_ps - self.min_ps) / (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|k| {
                if k + 1 == self.points {
                    self.max_ps
                } else {
                    self.min_ps + step * k as f64
                }
            })
            .collect())
    }
}

/// Reflectivity for every dataset, or one value per dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSpec {
    Global(f64),
    PerDataset(Vec<f64>),
}

/// Synthetic campaign: every `(fiber length, window)` pair becomes one dataset,
/// fiber-length-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub source: SourceParams,
    pub filter: FilterParams,
    /// Use this `rho` instead of the one derived from source and filter.
    #[serde(default)]
    pub rho_override_ps2_inv: Option<f64>,
    pub beta2_ps2_per_km: f64,
    pub channels_km: Vec<f64>,
    pub windows_ns: Vec<f64>,
    pub eta: EtaSpec,
    /// Defaults to `[-1.5 T, 1.5 T]`, 201 points, per window.
    #[serde(default)]
    pub tau_grid: Option<TauGrid>,
    /// Expected counts on the plateau.
    pub peak_counts: f64,
    pub seed: u64,
}

impl CampaignConfig {
    pub fn dataset_count(&self) -> usize {
        self.channels_km.len() * self.windows_ns.len()
    }

    pub fn truth_rho(&self) -> Result<f64> {
        match self.rho_override_ps2_inv {
            Some(rho) if rho > 0.0 => Ok(rho),
            Some(_) => Err(Error::invalid("rho_override_ps2_inv", "must be > 0")),
            None => Ok(derive_spectral(&self.source, &self.filter)?.rho_ps2_inv),
        }
    }

    pub fn etas(&self) -> Result<Vec<f64>> {
        let n = self.dataset_count();
        let etas = match &self.eta {
            EtaSpec::Global(e) => vec![*e; n],
            EtaSpec::PerDataset(v) if v.len() == n => v.clone(),
            EtaSpec::PerDataset(v) => {
                return Err(Error::invalid("eta", format!("{} values for {} datasets", v.len(), n)))
            }
        };
        if etas.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::invalid("eta", "must lie in [0, 1]"));
        }
        Ok(etas)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_counts > 0.0 && self.peak_counts.is_finite()) {
            return Err(Error::invalid("peak_counts", "must be > 0"));
        }
        if self.channels_km.is_empty() || self.windows_ns.is_empty() {
            return Err(Error::invalid("channels_km/windows_ns", "must be non-empty"));
        }
        for &l in &self.channels_km {
            ChannelParams::new(l, self.beta2_ps2_per_km)?;
        }
        for &t in &self.windows_ns {
            DetectionParams::new(t * PS_PER_NS, 0.5)?;
        }
        if let Some(grid) = &self.tau_grid {
            grid.values()?;
        }
        self.etas()?;
        self.truth_rho()?;
        Ok(())
    }
}

/// Uniform double in `[0, 1)` from the top 53 bits.
fn uniform(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `ln(k!)`: exact sum below 16, Stirling series above.
fn ln_factorial(k: u64) -> f64 {
    if k < 16 {
        return (2..=k).map(|i| (i as f64).ln()).sum();
    }
    let x = k as f64 + 1.0;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// Poisson variate: sequential inversion below a mean of 30, transformed
/// rejection (PTRS) above.
pub fn sample_poisson(rng: &mut ChaCha20Rng, mean: f64) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    if mean < 30.0 {
        let u = uniform(rng);
        let mut p = (-mean).exp();
        let mut cdf = p;
        let mut k = 0u64;
        while u > cdf && k < 10_000 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        return k;
    }
    let smu = mean.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    let ln_mean = mean.ln();
    loop {
        let u = uniform(rng) - 0.5;
        let v = uniform(rng);
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        if lhs <= -mean + k * ln_mean - ln_factorial(k as u64) {
            return k as u64;
        }
    }
}

/// Noisy curves for every configuration in the campaign.
///
/// Each dataset draws from its own ChaCha20 stream (`seed`, stream = dataset
/// index), so output is identical for any execution mode.
pub fn generate_synthetic(config: &CampaignConfig, exec: Execution) -> Result<Vec<Dataset>> {
    config.validate()?;
    let rho = config.truth_rho()?;
    let etas = config.etas()?;
    let configs: Vec<(usize, f64, f64)> = config
        .channels_km
        .iter()
        .flat_map(|&l| config.windows_ns.iter().map(move |&t| (l, t)))
        .enumerate()
        .map(|(k, (l, t))| (k, l, t))
        .collect();

    exec.map(&configs, |&(k, length_km, window_ns)| {
        let window_ps = window_ns * PS_PER_NS;
        let channel = ChannelParams::new(length_km, config.beta2_ps2_per_km)?;
        let detection = DetectionParams::new(window_ps, etas[k])?;
        let params = RateParams::from_physical(rho, &channel, &detection)?;
        let grid = config
            .tau_grid
            .unwrap_or_else(|| TauGrid::default_for_window(window_ps))
            .values()?;
        let mean = coincidence_curve(&grid, &params, Execution::Sequential)?;
        let scale = config.peak_counts / params.plateau();

        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        rng.set_stream(k as u64);
        let counts = mean
            .values()
            .iter()
            .map(|&m| sample_poisson(&mut rng, scale * m) as f64)
            .collect();
        Dataset::new(
            HomCurve::new(grid, counts)?,
            window_ps,
            length_km,
            format!("L{length_km}km_T{window_ns}ns"),
        )
    })
    .into_iter()
    .collect()
}
