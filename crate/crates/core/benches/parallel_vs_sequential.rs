use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use disphom::fitting::{global_loss, lm_fit, FitOptions, FitParams};
use disphom::model::{
    broadened_rho, coincidence_curve, eta_prime, ChannelParams, FilterConvention, FilterParams, RateParams,
    SourceParams,
};
use disphom::oracle::{oracle_curve, DifferenceAmplitude, QuadratureSpec};
use disphom::synth::{generate_synthetic, CampaignConfig, EtaSpec, TauGrid};
use disphom::Execution;

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn campaign() -> CampaignConfig {
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
        rho_override_ps2_inv: Some(14.53),
        beta2_ps2_per_km: 21.39,
        channels_km: vec![1.0, 3.0, 5.0, 10.0, 15.0, 20.0, 22.0, 25.0, 27.0, 29.0],
        windows_ns: vec![0.3, 0.4, 0.5, 0.6, 0.8, 1.0],
        eta: EtaSpec::Global(0.55),
        tau_grid: Some(TauGrid {
            min_ps: -15.0,
            max_ps: 15.0,
            points: 301,
        }),
        peak_counts: 1e4,
        seed: 1,
    }
}

fn curve(c: &mut Criterion) {
    let rp = broadened_rho(14.53, &ChannelParams::new(10.0, 21.39).unwrap()).unwrap();
    let p = RateParams::new(14.53, rp, eta_prime(0.55).unwrap(), 400.0).unwrap();
    let grid: Vec<f64> = (0..100_001).map(|k| -50.0 + 0.001 * k as f64).collect();
    let mut g = c.benchmark_group("closed_form_curve_100k");
    for mode in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| coincidence_curve(black_box(&grid), &p, mode).unwrap())
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let amp = DifferenceAmplitude::new(14.53, 10.0, 21.39).unwrap();
    let grid: Vec<f64> = (0..41).map(|k| -600.0 + 30.0 * k as f64).collect();
    let spec = QuadratureSpec {
        rel_tol: 1e-7,
        ..QuadratureSpec::default()
    };
    let mut g = c.benchmark_group("oracle_curve_41");
    g.sample_size(10);
    for mode in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| oracle_curve(black_box(&grid), 400.0, 0.55, &amp, &spec, mode).unwrap())
        });
    }
    g.finish();
}

fn fitting(c: &mut Criterion) {
    let data = generate_synthetic(&campaign(), Execution::default()).unwrap();
    let init = FitParams {
        beta2_ps2_per_km: 20.0,
        rho_ps2_inv: 13.0,
        etas: vec![0.6; data.len()],
    };

    let mut g = c.benchmark_group("global_loss_60");
    for mode in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| global_loss(black_box(&init), &data, mode).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("lm_fit_60");
    g.sample_size(10);
    for mode in MODES {
        let options = FitOptions {
            exec: mode,
            ..FitOptions::default()
        };
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("{mode:?}")),
            &options,
            |b, options| b.iter(|| lm_fit(black_box(&data), &init, options).unwrap()),
        );
    }
    g.finish();

    let mut g = c.benchmark_group("synthetic_campaign_60");
    for mode in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| generate_synthetic(black_box(&campaign()), mode).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, curve, oracle, fitting);
criterion_main!(benches);
