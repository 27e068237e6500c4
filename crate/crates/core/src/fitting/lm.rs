//! Levenberg-Marquardt driver for the global fit.
//!
//! The optimizer works in internal coordinates `[beta2 / 10, ln rho, u_1..u_n]`
//! with `eta_i = 1/2 + logistic(u_i) / 2`, which keeps `rho > 0` and
//! `eta_i` in `(1/2, 1)` without constraints and puts all columns of the
//! Jacobian on comparable scales.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{dataset_residuals, profile_scale_weighted, rmsre, Dataset, FitParams, Rmsre};
use crate::error::{Error, Result};
use crate::exec::{pairwise_sum, pairwise_sum_by, Execution};

const BETA2_UNIT: f64 = 10.0;
const SHARED: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Weighting {
    /// Plain `sum (s f - y)^2`.
    #[default]
    Uniform,
    /// Each bin weighted by `1 / max(y, 1)`, the Poisson variance estimate.
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub initial_lambda: f64,
    /// Damping is multiplied by this on a rejected step and divided on an accepted one.
    pub lambda_factor: f64,
    /// Stop once an accepted step lowers the loss by less than this fraction.
    pub rel_loss_tol: f64,
    /// Central-difference step relative to `max(|theta_j|, 1)`.
    pub fd_rel_step: f64,
    /// Eigenvalues of `J^T J` below this fraction of the largest are treated as zero.
    pub singular_rel_threshold: f64,
    pub weighting: Weighting,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            initial_lambda: 1e-3,
            lambda_factor: 10.0,
            rel_loss_tol: 1e-10,
            fd_rel_step: 1e-6,
            singular_rel_threshold: 1e-12,
            weighting: Weighting::Uniform,
            exec: Execution::default(),
        }
    }
}

/// Outcome of [`lm_fit`]. Physical-parameter order in `covariance` is
/// `[beta2, rho, eta_1, ..., eta_n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: FitParams,
    pub beta2_sigma_ps2_per_km: f64,
    pub rho_sigma_ps2_inv: f64,
    pub eta_sigmas: Vec<f64>,
    /// Profiled per-dataset scales at the optimum.
    pub scales: Vec<f64>,
    /// `None` for a dataset whose bins are all zero.
    pub rmsre: Vec<Option<Rmsre>>,
    pub covariance: Vec<Vec<f64>>,
    /// Of `J^T J` in internal coordinates.
    pub condition_number: f64,
    /// `J^T J` was (numerically) singular and the covariance comes from its pseudo-inverse.
    pub singular: bool,
    pub loss: f64,
    /// Loss after each accepted step, starting with the initial loss.
    pub loss_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub points: usize,
    pub free_parameters: usize,
}

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn eta_of(u: f64) -> f64 {
    0.5 + 0.5 * logistic(u)
}

fn deta_du(u: f64) -> f64 {
    let s = logistic(u);
    0.5 * s * (1.0 - s)
}

fn u_of(eta: f64) -> f64 {
    let q = (2.0 * eta - 1.0).clamp(1e-8, 1.0 - 1e-12);
    (q / (1.0 - q)).ln()
}

struct Problem<'a> {
    datasets: &'a [Dataset],
    sqrt_weights: Vec<Vec<f64>>,
    offsets: Vec<usize>,
    points: usize,
    exec: Execution,
}

impl<'a> Problem<'a> {
    fn new(datasets: &'a [Dataset], weighting: Weighting, exec: Execution) -> Self {
        let sqrt_weights = datasets
            .iter()
            .map(|d| {
                d.curve
                    .values()
                    .iter()
                    .map(|&y| match weighting {
                        Weighting::Uniform => 1.0,
                        Weighting::Poisson => 1.0 / y.max(1.0).sqrt(),
                    })
                    .collect()
            })
            .collect();
        let mut offsets = Vec::with_capacity(datasets.len() + 1);
        let mut acc = 0;
        for d in datasets {
            offsets.push(acc);
            acc += d.curve.len();
        }
        offsets.push(acc);
        Problem {
            datasets,
            sqrt_weights,
            offsets,
            points: acc,
            exec,
        }
    }

    /// Weighted profiled residual block of dataset `i`.
    fn block(&self, i: usize, beta2_scaled: f64, ln_rho: f64, u: f64) -> Result<Vec<f64>> {
        let ds = &self.datasets[i];
        let f = ds.model_values(beta2_scaled * BETA2_UNIT, ln_rho.exp(), eta_of(u))?;
        let y = ds.curve.values();
        let sw = &self.sqrt_weights[i];
        let w: Vec<f64> = sw.iter().map(|v| v * v).collect();
        let s = profile_scale_weighted(&f, y, &w)?;
        Ok(f.iter()
            .zip(y)
            .zip(sw)
            .map(|((fi, yi), wi)| wi * (s * fi - yi))
            .collect())
    }

    fn residuals(&self, theta: &[f64]) -> Result<DVector<f64>> {
        let blocks: Result<Vec<Vec<f64>>> = self
            .exec
            .map_range(self.datasets.len(), |i| {
                self.block(i, theta[0], theta[1], theta[SHARED + i])
            })
            .into_iter()
            .collect();
        Ok(DVector::from_iterator(self.points, blocks?.into_iter().flatten()))
    }

    /// Central differences. Column `2 + i` only touches the rows of dataset `i`.
    fn jacobian(&self, theta: &[f64], rel_step: f64) -> Result<DMatrix<f64>> {
        let nd = self.datasets.len();
        let cols: Result<Vec<Vec<f64>>> = self
            .exec
            .map_range(nd * 3, |task| {
                let (i, local) = (task / 3, task % 3);
                let col = if local < SHARED { local } else { SHARED + i };
                let h = rel_step * theta[col].abs().max(1.0);
                let eval = |delta: f64| {
                    let mut t = [theta[0], theta[1], theta[SHARED + i]];
                    t[local] += delta;
                    self.block(i, t[0], t[1], t[2])
                };
                let (plus, minus) = (eval(h)?, eval(-h)?);
                Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect())
            })
            .into_iter()
            .collect();
        let cols = cols?;
        let mut jac = DMatrix::zeros(self.points, SHARED + nd);
        for (task, values) in cols.into_iter().enumerate() {
            let (i, local) = (task / 3, task % 3);
            let col = if local < SHARED { local } else { SHARED + i };
            for (k, v) in values.into_iter().enumerate() {
                jac[(self.offsets[i] + k, col)] = v;
            }
        }
        Ok(jac)
    }
}

fn sum_sq(r: &DVector<f64>) -> f64 {
    pairwise_sum_by(r.len(), |i| r[i] * r[i])
}

/// Global Levenberg-Marquardt fit with profiled per-dataset scales.
///
/// The covariance is `(J^T J)^-1 sum r^2 / (n - p)` evaluated on the profiled
/// residuals, so the parameter dependence of the scales is propagated. It is
/// mapped from internal to physical coordinates by the chain rule.
/// Non-convergence within `max_iterations` gives `converged == false`
/// rather than an error.
pub fn lm_fit(datasets: &[Dataset], init: &FitParams, options: &FitOptions) -> Result<FitResult> {
    if datasets.is_empty() {
        return Err(Error::InsufficientData("no datasets".into()));
    }
    init.validate(datasets.len())?;
    let problem = Problem::new(datasets, options.weighting, options.exec);
    let p = SHARED + datasets.len();
    let n = problem.points;
    if n < p + 1 {
        return Err(Error::InsufficientData(format!("{n} points for {p} free parameters")));
    }

    let init = init.clone().canonicalized();
    let mut theta: Vec<f64> = [init.beta2_ps2_per_km / BETA2_UNIT, init.rho_ps2_inv.ln()]
        .into_iter()
        .chain(init.etas.iter().map(|&e| u_of(e)))
        .collect();

    let data_energy = pairwise_sum(
        &datasets
            .iter()
            .zip(&problem.sqrt_weights)
            .map(|(d, sw)| d.curve.values().iter().zip(sw).map(|(y, w)| (w * y).powi(2)).sum())
            .collect::<Vec<f64>>(),
    );
    let loss_floor = 1e-24 * data_energy;

    let mut r = problem.residuals(&theta)?;
    let mut loss = sum_sq(&r);
    let mut history = vec![loss];
    let mut lambda = options.initial_lambda;
    let mut converged = loss <= loss_floor;
    let mut iterations = 0;

    while !converged && iterations < options.max_iterations {
        iterations += 1;
        let jac = problem.jacobian(&theta, options.fd_rel_step)?;
        let jtj = jac.tr_mul(&jac);
        let grad = jac.tr_mul(&r);
        let diag_floor = 1e-12 * jtj.diagonal().max().max(f64::MIN_POSITIVE);

        let mut accepted = false;
        while lambda <= 1e16 {
            let mut lhs = jtj.clone();
            for j in 0..p {
                lhs[(j, j)] += lambda * jtj[(j, j)].max(diag_floor);
            }
            let Some(chol) = lhs.cholesky() else {
                lambda *= options.lambda_factor;
                continue;
            };
            let step = chol.solve(&(-&grad));
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            // a trial that leaves the model's domain counts as a rejected step
            if let Ok(r_new) = problem.residuals(&trial) {
                let loss_new = sum_sq(&r_new);
                if loss_new < loss {
                    let rel = (loss - loss_new) / loss;
                    theta = trial;
                    r = r_new;
                    loss = loss_new;
                    history.push(loss);
                    lambda = (lambda / options.lambda_factor).max(1e-15);
                    accepted = true;
                    converged = rel < options.rel_loss_tol || loss <= loss_floor;
                    break;
                }
            }
            lambda *= options.lambda_factor;
        }
        if !accepted {
            // no descent direction left at any damping: numerically stationary
            converged = true;
        }
    }

    // covariance at the final point
    let jac = problem.jacobian(&theta, options.fd_rel_step)?;
    let jtj = jac.tr_mul(&jac);
    let eig = SymmetricEigen::new(jtj);
    let max_ev = eig.eigenvalues.max();
    let min_ev = eig.eigenvalues.min();
    let cutoff = options.singular_rel_threshold * max_ev;
    let singular = !(min_ev > cutoff);
    let condition_number = if min_ev > 0.0 { max_ev / min_ev } else { f64::INFINITY };
    let inv_ev = eig.eigenvalues.map(|v| if v > cutoff { 1.0 / v } else { 0.0 });
    let pinv = &eig.eigenvectors * DMatrix::from_diagonal(&inv_ev) * eig.eigenvectors.transpose();
    let residual_variance = loss / (n - p) as f64;

    let beta2 = theta[0] * BETA2_UNIT;
    let rho = theta[1].exp();
    let etas: Vec<f64> = theta[SHARED..].iter().map(|&u| eta_of(u)).collect();
    let chain: Vec<f64> = [BETA2_UNIT, rho]
        .into_iter()
        .chain(theta[SHARED..].iter().map(|&u| deta_du(u)))
        .collect();
    let covariance: Vec<Vec<f64>> = (0..p)
        .map(|a| {
            (0..p)
                .map(|b| chain[a] * chain[b] * pinv[(a, b)] * residual_variance)
                .collect()
        })
        .collect();
    let sigma = |k: usize| covariance[k][k].max(0.0).sqrt();

    let params = FitParams {
        beta2_ps2_per_km: beta2,
        rho_ps2_inv: rho,
        etas,
    };
    let mut scales = Vec::with_capacity(datasets.len());
    let mut diagnostics = Vec::with_capacity(datasets.len());
    for (ds, &eta) in datasets.iter().zip(&params.etas) {
        let (s, res) = dataset_residuals(ds, beta2, rho, eta)?;
        scales.push(s);
        diagnostics.push(rmsre(&res, ds.curve.values()).ok());
    }

    Ok(FitResult {
        beta2_sigma_ps2_per_km: sigma(0),
        rho_sigma_ps2_inv: sigma(1),
        eta_sigmas: (SHARED..p).map(sigma).collect(),
        params,
        scales,
        rmsre: diagnostics,
        covariance,
        condition_number,
        singular,
        loss,
        loss_history: history,
        iterations,
        converged,
        points: n,
        free_parameters: p,
    })
}
