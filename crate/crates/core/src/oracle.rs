//! Brute-force reference for the windowed coincidence rate.
//!
//! The time-domain difference amplitude is built from its closed-form
//! Fourier transform (a chirped Gaussian), the time-resolved coincidence
//! density is formed from it directly, and the window integral over the
//! inter-detector delay is done by adaptive Simpson quadrature. Nothing
//! here touches the error-function kernel or the closed-form rate.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{pairwise_sum, Execution};
use crate::model::types::check_grid;
use crate::model::HomCurve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureMethod {
    /// Recursive bisection with Richardson-corrected Simpson panels.
    AdaptiveSimpson,
    /// Composite Simpson on each panel, halving the step until two
    /// successive refinements agree.
    FixedSimpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub method: QuadratureMethod,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum bisection depth (adaptive) or number of step halvings (fixed).
    pub max_subdivisions: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            method: QuadratureMethod::AdaptiveSimpson,
            abs_tol: 1e-12,
            rel_tol: 1e-9,
            max_subdivisions: 24,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::invalid("tolerance", "abs_tol and rel_tol must be > 0"));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::invalid("max_subdivisions", "must be >= 1"));
        }
        Ok(())
    }
}

/// Quadrature result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub error_bound: f64,
    pub evaluations: usize,
}

struct Simpson<'a, F> {
    f: &'a F,
    max_depth: u32,
    evaluations: usize,
    error: f64,
    converged: bool,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn adapt(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = ((self.f)(lm), (self.f)(rm));
        self.evaluations += 2;
        let h = (b - a) / 12.0;
        let left = h * (fa + 4.0 * flm + fm);
        let right = h * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if diff.abs() <= 15.0 * tol || depth >= self.max_depth || m <= a || b <= m {
            if diff.abs() > 15.0 * tol {
                self.converged = false;
            }
            self.error += diff.abs() / 15.0;
            return left + right + diff / 15.0;
        }
        self.adapt(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
            + self.adapt(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
    }
}

fn simpson_composite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals.max(2) & !1;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Integrate `f` over consecutive panels `[edges[k], edges[k+1]]`.
///
/// The tolerance `max(abs_tol, rel_tol * |coarse estimate|)` is shared
/// between panels in proportion to their width.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: &F, edges: &[f64], spec: &QuadratureSpec) -> Result<Integral> {
    spec.validate()?;
    if edges.len() < 2 {
        return Ok(Integral {
            value: 0.0,
            error_bound: 0.0,
            evaluations: 0,
        });
    }
    let total = edges[edges.len() - 1] - edges[0];
    let mut evaluations = 0usize;
    // coarse pass: plain Simpson per panel
    let coarse: Vec<(f64, f64, f64, f64)> = edges
        .windows(2)
        .map(|w| {
            let (fa, fm, fb) = (f(w[0]), f(0.5 * (w[0] + w[1])), f(w[1]));
            (fa, fm, fb, (w[1] - w[0]) / 6.0 * (fa + 4.0 * fm + fb))
        })
        .collect();
    evaluations += 3 * coarse.len();
    let estimate = pairwise_sum(&coarse.iter().map(|c| c.3).collect::<Vec<_>>());
    let tol = spec.abs_tol.max(spec.rel_tol * estimate.abs());

    let mut pieces = Vec::with_capacity(coarse.len());
    let mut error = 0.0;
    let mut converged = true;
    for (w, &(fa, fm, fb, whole)) in edges.windows(2).zip(&coarse) {
        let panel_tol = tol * (w[1] - w[0]) / total;
        match spec.method {
            QuadratureMethod::AdaptiveSimpson => {
                let mut s = Simpson {
                    f,
                    max_depth: spec.max_subdivisions,
                    evaluations: 0,
                    error: 0.0,
                    converged: true,
                };
                pieces.push(s.adapt(w[0], w[1], fa, fm, fb, whole, panel_tol, 0));
                evaluations += s.evaluations;
                error += s.error;
                converged &= s.converged;
            }
            QuadratureMethod::FixedSimpson => {
                let mut n = 2usize;
                let mut prev = whole;
                let mut done = false;
                for _ in 0..spec.max_subdivisions {
                    n *= 2;
                    let next = simpson_composite(f, w[0], w[1], n);
                    evaluations += n + 1;
                    let diff = next - prev;
                    prev = next + diff / 15.0;
                    if diff.abs() <= 15.0 * panel_tol {
                        error += diff.abs() / 15.0;
                        done = true;
                        break;
                    }
                }
                if !done {
                    converged = false;
                    error += panel_tol.max(prev.abs() * f64::EPSILON);
                }
                pieces.push(prev);
            }
        }
    }
    let value = pairwise_sum(&pieces);
    if !converged {
        return Err(Error::QuadratureNotConverged {
            estimate: value,
            error_bound: error,
        });
    }
    Ok(Integral {
        value,
        error_bound: error,
        evaluations,
    })
}

/// Time-domain difference amplitude after fiber propagation.
///
/// Unit-norm frequency amplitude `(pi rho)^(-1/4) exp(-w^2/(2 rho) - i L beta2
/// w^2 / 2)`, transformed with the unitary convention: with `a = (1/rho + i L
/// beta2)/2`,
/// `b(t) = (pi rho)^(-1/4) (2a)^(-1/2) exp(-t^2/(4a))`, so `|b(t)|^2 =
/// sqrt(rho'/pi) exp(-rho' t^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferenceAmplitude {
    prefactor: Complex64,
    inv_4a: Complex64,
    rho: f64,
    gdd_ps2: f64,
}

impl DifferenceAmplitude {
    pub fn new(rho: f64, fiber_length_km: f64, beta2_ps2_per_km: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid("rho", "must be > 0"));
        }
        let gdd = fiber_length_km * beta2_ps2_per_km;
        let a = Complex64::new(0.5 / rho, 0.5 * gdd);
        let prefactor = (PI * rho).powf(-0.25) * (2.0 * a).sqrt().inv();
        Ok(DifferenceAmplitude {
            prefactor,
            inv_4a: (4.0 * a).inv(),
            rho,
            gdd_ps2: gdd,
        })
    }

    pub fn at(&self, t_ps: f64) -> Complex64 {
        self.prefactor * (-(t_ps * t_ps) * self.inv_4a).exp()
    }

    /// Frequency-domain amplitude that [`DifferenceAmplitude::at`] transforms.
    pub fn spectrum(&self, omega: f64) -> Complex64 {
        let w2 = omega * omega;
        (PI * self.rho).powf(-0.25) * Complex64::new(-w2 / (2.0 * self.rho), -0.5 * self.gdd_ps2 * w2).exp()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Broadened width parameter: `Re(1/(2a)) = rho / (1 + (L beta2 rho)^2)`.
    pub fn rho_prime(&self) -> f64 {
        2.0 * self.inv_4a.re
    }

    /// Magnitude of the linear chirp coefficient, `sqrt(rho' (rho - rho'))`.
    pub fn chirp_rate(&self) -> f64 {
        2.0 * self.inv_4a.im.abs()
    }
}

/// `beta_-(t)` for the given width, fiber length and dispersion.
pub fn beta_minus_time(t_ps: f64, rho: f64, fiber_length_km: f64, beta2_ps2_per_km: f64) -> Result<Complex64> {
    Ok(DifferenceAmplitude::new(rho, fiber_length_km, beta2_ps2_per_km)?.at(t_ps))
}

/// Coincidence density at delay `tau` and detector time difference `sigma`:
/// `(1/sqrt 2) |eta b((tau+sigma)/sqrt 2) - (1-eta) b((tau-sigma)/sqrt 2)|^2`.
pub fn differential_rate(tau_ps: f64, sigma_ps: f64, eta: f64, amplitude: &DifferenceAmplitude) -> f64 {
    let u = FRAC_1_SQRT_2;
    let z = eta * amplitude.at((tau_ps + sigma_ps) * u) - (1.0 - eta) * amplitude.at((tau_ps - sigma_ps) * u);
    u * z.norm_sqr()
}

/// Panel edges covering the part of `[-T, T]` where the density is not
/// negligible, one contiguous run per lobe (lobes sit at `sigma = -tau` and
/// `sigma = +tau` and merge when they overlap). Panels are fine enough to
/// resolve the lobe width and, while the interference term still matters,
/// the chirp beat `exp(-i k tau sigma)`.
fn window_panels(tau_ps: f64, window_half_width_ps: f64, amplitude: &DifferenceAmplitude) -> Vec<Vec<f64>> {
    // beyond 12 widths the density is below exp(-72) of its peak
    const SUPPORT_WIDTHS: f64 = 12.0;
    const MAX_PANELS: usize = 400_000;
    let t = window_half_width_ps;
    let width = amplitude.rho_prime().sqrt().recip();
    let reach = SUPPORT_WIDTHS * width;

    let mut spans: Vec<(f64, f64)> = [-tau_ps, tau_ps]
        .iter()
        .map(|&c| ((c - reach).max(-t), (c + reach).min(t)))
        .filter(|(a, b)| a < b)
        .collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in spans {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }

    // the interference term carries exp(-rho' (tau^2 + sigma^2) / 2); below
    // exp(-40) ~ 4e-18 it is invisible next to any sensible tolerance
    let interferes = 0.5 * amplitude.rho_prime() * tau_ps * tau_ps < 40.0;
    let beat = amplitude.chirp_rate() * tau_ps.abs();
    let step = if interferes && beat > 0.0 {
        (0.5 * width).min(PI / beat)
    } else {
        0.5 * width
    };

    merged
        .into_iter()
        .map(|(a, b)| {
            let n = (((b - a) / step).ceil() as usize).clamp(1, MAX_PANELS);
            let h = (b - a) / n as f64;
            let mut edges: Vec<f64> = (0..n).map(|k| a + h * k as f64).collect();
            edges.push(b);
            edges
        })
        .collect()
}

/// Window integral of [`differential_rate`] over `sigma` in `[-T, T]`.
pub fn windowed_rate_numeric(
    tau_ps: f64,
    window_half_width_ps: f64,
    eta: f64,
    amplitude: &DifferenceAmplitude,
    spec: &QuadratureSpec,
) -> Result<Integral> {
    if !(window_half_width_ps > 0.0 && window_half_width_ps.is_finite()) {
        return Err(Error::invalid("window_half_width_ps", "must be > 0"));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid("eta", "must lie in [0, 1]"));
    }
    spec.validate()?;
    let integrand = |sigma: f64| differential_rate(tau_ps, sigma, eta, amplitude);
    let mut total = Integral {
        value: 0.0,
        error_bound: 0.0,
        evaluations: 0,
    };
    for run in window_panels(tau_ps, window_half_width_ps, amplitude) {
        let part = integrate_panels(&integrand, &run, spec)?;
        total.value += part.value;
        total.error_bound += part.error_bound;
        total.evaluations += part.evaluations;
    }
    Ok(total)
}

/// [`windowed_rate_numeric`] over a delay grid.
pub fn oracle_curve(
    grid_ps: &[f64],
    window_half_width_ps: f64,
    eta: f64,
    amplitude: &DifferenceAmplitude,
    spec: &QuadratureSpec,
    exec: Execution,
) -> Result<HomCurve> {
    check_grid(grid_ps)?;
    let values: Result<Vec<f64>> = exec
        .map(grid_ps, |&tau| {
            windowed_rate_numeric(tau, window_half_width_ps, eta, amplitude, spec).map(|i| i.value.max(0.0))
        })
        .into_iter()
        .collect();
    HomCurve::new(grid_ps.to_vec(), values?)
}

/// Outcome of comparing a model curve with a reference after fitting one
/// global scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleMatchedDeviation {
    pub scale: f64,
    /// `max |scale * model - reference| / max(|reference|, floor)`.
    pub max_relative_deviation: f64,
    pub tau_at_max_ps: f64,
}

/// Relative agreement between `model` and `reference` after the
/// least-squares scale `sum(f y) / sum(f^2)` is applied to the model. Points
/// whose reference value is below `floor_fraction * max(reference)` are
/// measured against that floor, i.e. absolutely.
pub fn scale_matched_deviation(
    tau_ps: &[f64],
    model: &[f64],
    reference: &[f64],
    floor_fraction: f64,
) -> Result<ScaleMatchedDeviation> {
    let scale = crate::fitting::profile_scale(model, reference)?;
    let peak = reference.iter().copied().fold(0.0, f64::max);
    let floor = floor_fraction * peak;
    let mut worst = (0.0, f64::NAN);
    for ((&t, &f), &y) in tau_ps.iter().zip(model).zip(reference) {
        let denom = y.abs().max(floor);
        let dev = if denom > 0.0 {
            (scale * f - y).abs() / denom
        } else {
            (scale * f - y).abs()
        };
        if dev > worst.0 || worst.1.is_nan() {
            worst = (dev, t);
        }
    }
    Ok(ScaleMatchedDeviation {
        scale,
        max_relative_deviation: worst.0,
        tau_at_max_ps: worst.1,
    })
}

/// Worst disagreement between `sinc(x) = sin(x)/x` and `exp(-x^2/6)` on a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SincReport {
    pub max_deviation: f64,
    pub at_x: f64,
}

pub fn sinc_gaussian_check(x_min: f64, x_max: f64, points: usize) -> Result<SincReport> {
    if !(x_min.is_finite() && x_max.is_finite() && x_min <= x_max) {
        return Err(Error::invalid("x_range", "must be finite and ordered"));
    }
    let n = points.max(2);
    let mut report = SincReport {
        max_deviation: 0.0,
        at_x: x_min,
    };
    for k in 0..n {
        let x = x_min + (x_max - x_min) * k as f64 / (n - 1) as f64;
        let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
        let dev = (sinc - (-x * x / 6.0).exp()).abs();
        if dev > report.max_deviation {
            report = SincReport {
                max_deviation: dev,
                at_x: x,
            };
        }
    }
    Ok(report)
}
