use disphom::fitting::{global_loss, lm_fit, Dataset, FitOptions, FitParams, Weighting};
use disphom::model::{FilterConvention, FilterParams, HomCurve, SourceParams};
use disphom::synth::{generate_synthetic, CampaignConfig, EtaSpec, TauGrid};
use disphom::{Error, Execution};

const RHO: f64 = 14.53;
const BETA2: f64 = 21.39;

fn config(channels: Vec<f64>, windows: Vec<f64>, peak: f64, seed: u64) -> CampaignConfig {
    let n = channels.len() * windows.len();
    CampaignConfig {
        source: SourceParams {
            delta_ng_signal: 0.0471,
            delta_ng_idler: -0.0415,
            crystal_length_mm: 2.0,
            pump_wavelength_nm: 775.0,
            pump_sigma_radps: 0.0,
            poling_period_um: 46.2,
        },
        filter: FilterParams {
            center_wavelength_nm: 1550.0,
            fwhm_nm: 12.0,
            convention: FilterConvention::FieldLevel,
        },
        rho_override_ps2_inv: Some(RHO),
        beta2_ps2_per_km: BETA2,
        channels_km: channels,
        windows_ns: windows,
        eta: EtaSpec::PerDataset((0..n).map(|k| 0.55 + 0.02 * (k % 4) as f64).collect()),
        tau_grid: Some(TauGrid {
            min_ps: -12.0,
            max_ps: 12.0,
            points: 241,
        }),
        peak_counts: peak,
        seed,
    }
}

fn small(seed: u64) -> (CampaignConfig, Vec<Dataset>) {
    let c = config(vec![5.0, 15.0, 25.0], vec![0.4, 0.8], 1e4, seed);
    let d = generate_synthetic(&c, Execution::default()).unwrap();
    (c, d)
}

/// Noise-free counterpart: the expected counts of every dataset.
fn noiseless(datasets: &[Dataset], etas: &[f64]) -> Vec<Dataset> {
    datasets
        .iter()
        .zip(etas)
        .map(|(d, &eta)| {
            let f = d.model_values(BETA2, RHO, eta).unwrap();
            let curve = HomCurve::new(d.curve.tau_ps().to_vec(), f.iter().map(|v| 1e4 * v).collect()).unwrap();
            Dataset::new(curve, d.window_half_width_ps, d.fiber_length_km, d.label.clone()).unwrap()
        })
        .collect()
}

fn init(n: usize) -> FitParams {
    FitParams {
        beta2_ps2_per_km: 20.0,
        rho_ps2_inv: 13.5,
        etas: vec![0.6; n],
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn truth_start_on_exact_data_stops_quickly() {
    let (c, noisy) = small(1);
    let etas = c.etas().unwrap();
    let data = noiseless(&noisy, &etas);
    let truth = FitParams {
        beta2_ps2_per_km: BETA2,
        rho_ps2_inv: RHO,
        etas: etas.clone(),
    };
    let fit = lm_fit(&data, &truth, &FitOptions::default()).unwrap();
    assert!(fit.converged);
    assert!(fit.iterations <= 3, "{} iterations", fit.iterations);
    assert!(rel(fit.params.beta2_ps2_per_km, BETA2) < 1e-8);
    assert!(rel(fit.params.rho_ps2_inv, RHO) < 1e-8);
}

#[test]
fn recovers_truth_from_offset_start() {
    let (c, data) = small(2);
    let fit = lm_fit(&data, &init(data.len()), &FitOptions::default()).unwrap();
    assert!(fit.converged);
    assert!(!fit.singular);
    assert!(
        (fit.params.beta2_ps2_per_km - BETA2).abs() <= 4.0 * fit.beta2_sigma_ps2_per_km,
        "{fit:?}"
    );
    assert!((fit.params.rho_ps2_inv - RHO).abs() <= 4.0 * fit.rho_sigma_ps2_inv);
    for (got, want) in fit.params.etas.iter().zip(c.etas().unwrap()) {
        assert!(*got >= 0.5 && (got - want).abs() < 0.01, "{got} vs {want}");
    }
    // loss history is non-increasing
    assert!(fit.loss_history.windows(2).all(|w| w[1] <= w[0]));
    // covariance is symmetric with nonnegative diagonal
    for a in 0..fit.free_parameters {
        assert!(fit.covariance[a][a] >= 0.0);
        for b in 0..a {
            assert!(
                (fit.covariance[a][b] - fit.covariance[b][a]).abs()
                    <= 1e-12 * fit.covariance[a][a].max(fit.covariance[b][b])
            );
        }
    }
    assert_eq!(fit.points, data.iter().map(|d| d.curve.len()).sum::<usize>());
    assert_eq!(fit.free_parameters, 2 + data.len());
}

#[test]
fn residuals_sit_at_the_counting_noise_floor() {
    let (_, data) = small(3);
    let fit = lm_fit(&data, &init(data.len()), &FitOptions::default()).unwrap();
    for (r, d) in fit.rmsre.iter().zip(&data) {
        let r = r.unwrap();
        // expected RMSRE for Poisson noise: sqrt(mean(1 / mu))
        let floor = (d.curve.values().iter().map(|&y| 1.0 / y.max(1.0)).sum::<f64>() / d.curve.len() as f64).sqrt();
        assert!(
            r.value < 1.5 * floor && r.value > 0.5 * floor,
            "{}: {} vs {floor}",
            d.label,
            r.value
        );
    }
}

#[test]
fn counts_scaling_leaves_argmin_unchanged() {
    let (_, data) = small(4);
    let scaled: Vec<Dataset> = data
        .iter()
        .map(|d| Dataset {
            curve: d.curve.scaled(7.0).unwrap(),
            ..d.clone()
        })
        .collect();
    let a = lm_fit(&data, &init(data.len()), &FitOptions::default()).unwrap();
    let b = lm_fit(&scaled, &init(data.len()), &FitOptions::default()).unwrap();
    assert!(rel(b.params.beta2_ps2_per_km, a.params.beta2_ps2_per_km) <= 1e-6);
    assert!(rel(b.params.rho_ps2_inv, a.params.rho_ps2_inv) <= 1e-6);
    for (x, y) in a.params.etas.iter().zip(&b.params.etas) {
        assert!(rel(*y, *x) <= 1e-6);
    }
    for (x, y) in a.scales.iter().zip(&b.scales) {
        assert!(rel(*y, 7.0 * x) <= 1e-6);
    }
}

#[test]
fn delay_reversal_leaves_fit_unchanged() {
    let (_, data) = small(5);
    let reversed: Vec<Dataset> = data
        .iter()
        .map(|d| Dataset {
            curve: d.curve.reversed(),
            ..d.clone()
        })
        .collect();
    let a = lm_fit(&data, &init(data.len()), &FitOptions::default()).unwrap();
    let b = lm_fit(&reversed, &init(data.len()), &FitOptions::default()).unwrap();
    assert!(rel(b.params.beta2_ps2_per_km, a.params.beta2_ps2_per_km) <= 1e-8);
    assert!(rel(b.params.rho_ps2_inv, a.params.rho_ps2_inv) <= 1e-8);
}

#[test]
fn mirrored_eta_start_reaches_same_contrast() {
    let (_, data) = small(6);
    let mut mirrored = init(data.len());
    mirrored.etas = vec![0.4; data.len()];
    let a = lm_fit(&data, &init(data.len()), &FitOptions::default()).unwrap();
    let b = lm_fit(&data, &mirrored, &FitOptions::default()).unwrap();
    for (x, y) in a.params.etas.iter().zip(&b.params.etas) {
        assert!(*y >= 0.5);
        let (px, py) = ((2.0 * x - 1.0).powi(2), (2.0 * y - 1.0).powi(2));
        assert!((px - py).abs() <= 1e-6 * px.max(1e-3));
    }
}

#[test]
fn zero_length_fiber_alone_cannot_fix_dispersion() {
    let c = config(vec![0.0], vec![0.5], 1e4, 7);
    let data = generate_synthetic(&c, Execution::default()).unwrap();
    let fit = lm_fit(&data, &init(1), &FitOptions::default()).unwrap();
    assert!(fit.singular);
    assert!(fit.condition_number.is_infinite() || fit.condition_number > 1e12);
}

#[test]
fn uncertainty_shrinks_with_replicas() {
    let channels = vec![5.0, 15.0, 25.0];
    let base = config(channels.clone(), vec![0.5], 1e4, 8);
    let one = generate_synthetic(&base, Execution::default()).unwrap();
    let mut four = Vec::new();
    for seed in 8..12 {
        four.extend(generate_synthetic(&config(channels.clone(), vec![0.5], 1e4, seed), Execution::default()).unwrap());
    }
    let a = lm_fit(&one, &init(one.len()), &FitOptions::default()).unwrap();
    let b = lm_fit(&four, &init(four.len()), &FitOptions::default()).unwrap();
    let ratio = a.beta2_sigma_ps2_per_km / b.beta2_sigma_ps2_per_km;
    assert!((2.0 / 1.5..=2.0 * 1.5).contains(&ratio), "sigma ratio {ratio}");
}

#[test]
fn poisson_weighting_also_recovers_truth() {
    let (_, data) = small(9);
    let options = FitOptions {
        weighting: Weighting::Poisson,
        ..FitOptions::default()
    };
    let fit = lm_fit(&data, &init(data.len()), &options).unwrap();
    assert!(fit.converged);
    assert!((fit.params.beta2_ps2_per_km - BETA2).abs() <= 4.0 * fit.beta2_sigma_ps2_per_km);
}

#[test]
fn execution_modes_agree_bitwise() {
    let (_, data) = small(10);
    let seq = FitOptions {
        exec: Execution::Sequential,
        ..FitOptions::default()
    };
    let par = FitOptions {
        exec: Execution::Parallel,
        ..FitOptions::default()
    };
    let a = lm_fit(&data, &init(data.len()), &seq).unwrap();
    let b = lm_fit(&data, &init(data.len()), &par).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.loss_history, b.loss_history);
}

#[test]
fn loss_and_fit_reject_bad_input() {
    let (_, data) = small(11);
    assert!(matches!(
        lm_fit(&[], &init(0), &FitOptions::default()),
        Err(Error::InsufficientData(_))
    ));
    assert!(matches!(
        lm_fit(&data, &init(2), &FitOptions::default()),
        Err(Error::InvalidParameter { .. })
    ));
    let bad = FitParams {
        rho_ps2_inv: -1.0,
        ..init(data.len())
    };
    assert!(global_loss(&bad, &data, Execution::Sequential).is_err());
    let loss = global_loss(&init(data.len()), &data, Execution::Sequential).unwrap();
    assert_eq!(loss.scales.len(), data.len());
    assert!(loss.total > 0.0);
}

#[test]
fn more_counts_tighten_the_fit() {
    let channels = vec![5.0, 15.0, 25.0];
    let fit_at = |peak: f64| {
        let data = generate_synthetic(
            &config(channels.clone(), vec![0.4, 0.8], peak, 21),
            Execution::default(),
        )
        .unwrap();
        lm_fit(&data, &init(data.len()), &FitOptions::default()).unwrap()
    };
    let low = fit_at(1e4);
    let high = fit_at(1e6);
    let ratio = low.beta2_sigma_ps2_per_km / high.beta2_sigma_ps2_per_km;
    assert!((5.0..20.0).contains(&ratio), "sigma ratio {ratio}");
    assert!((high.params.beta2_ps2_per_km - BETA2).abs() <= 3.0 * high.beta2_sigma_ps2_per_km);
    assert!((high.params.rho_ps2_inv - RHO).abs() <= 3.0 * high.rho_sigma_ps2_inv);
}
