//! `disphom` command-line front-end.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use disphom::fitting::{lm_fit, Dataset, FitOptions, FitParams, Weighting};
use disphom::io::{file_sha256, read_curve, read_dataset_dir, write_dataset, PS_PER_NS};
use disphom::model::{
    broadened_rho, check_epm, coincidence_curve, coincidence_rate, derive_gammas, derive_spectral, extract_fwhm,
    oscillation_period, ChannelParams, DetectionParams, FilterConvention, RateParams, DEFAULT_EPM_REL_TOL,
};
use disphom::oracle::{oracle_curve, scale_matched_deviation, DifferenceAmplitude, QuadratureSpec};
use disphom::synth::{generate_synthetic, CampaignConfig, TauGrid};
use disphom::{Execution, HomCurve};

use report::*;

/// Exit status of `fit` when the optimizer stops without converging.
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "disphom",
    version,
    about = "Dispersive two-photon interference with finite coincidence windows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the closed-form coincidence curve as CSV plus sidecar.
    Simulate(CurveArgs),
    /// Write the quadrature reference curve and report its deviation from the closed form.
    Oracle {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, default_value_t = 1e-9)]
        rel_tol: f64,
        #[arg(long, default_value_t = 1e-12)]
        abs_tol: f64,
        /// Also write the deviation summary here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Spectral parameters from crystal and filter, under both filter conventions.
    DeriveSource {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a seeded synthetic campaign.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Global fit over every dataset in a directory.
    Fit {
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        init: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = WeightingArg::Uniform)]
        weighting: WeightingArg,
        #[arg(long, default_value_t = 200)]
        max_iterations: usize,
    },
    /// Dip width of a measured or simulated curve.
    Fwhm {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predicted side-lobe period.
    OscPeriod {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        beta2: f64,
        #[arg(long)]
        length_km: f64,
        #[arg(long)]
        window_ns: f64,
    },
}

#[derive(Args)]
struct CurveArgs {
    /// Spectral width parameter, ps^-2.
    #[arg(long)]
    rho: f64,
    /// Group-velocity dispersion, ps^2/km.
    #[arg(long)]
    beta2: f64,
    #[arg(long)]
    length_km: f64,
    /// Window half-width T, ns.
    #[arg(long)]
    window_ns: f64,
    /// Beam-splitter reflectivity.
    #[arg(long)]
    eta: f64,
    /// Defaults to -1.5 T.
    #[arg(long, allow_hyphen_values = true)]
    tau_min_ps: Option<f64>,
    /// Defaults to 1.5 T.
    #[arg(long, allow_hyphen_values = true)]
    tau_max_ps: Option<f64>,
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Uniform,
    Poisson,
}

struct Setup {
    rho: f64,
    channel: ChannelParams,
    detection: DetectionParams,
    grid: Vec<f64>,
}

impl CurveArgs {
    fn setup(&self) -> Result<Setup> {
        let window_ps = self.window_ns * PS_PER_NS;
        let channel = ChannelParams::new(self.length_km, self.beta2)?;
        let detection = DetectionParams::new(window_ps, self.eta)?;
        let default = TauGrid::default_for_window(window_ps);
        let grid = TauGrid {
            min_ps: self.tau_min_ps.unwrap_or(default.min_ps),
            max_ps: self.tau_max_ps.unwrap_or(default.max_ps),
            points: self.points,
        }
        .values()?;
        Ok(Setup {
            rho: self.rho,
            channel,
            detection,
            grid,
        })
    }

    fn dataset(&self, setup: &Setup, curve: HomCurve, label: &str) -> Result<Dataset> {
        Ok(Dataset::new(
            curve,
            setup.detection.window_half_width_ps,
            self.length_km,
            label,
        )?)
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn simulate(args: &CurveArgs) -> Result<()> {
    let setup = args.setup()?;
    let params = RateParams::from_physical(setup.rho, &setup.channel, &setup.detection)?;
    let curve = coincidence_curve(&setup.grid, &params, Execution::default())?;
    write_dataset(&args.dataset(&setup, curve, "simulated")?, &args.out)?;
    Ok(())
}

fn oracle(args: &CurveArgs, rel_tol: f64, abs_tol: f64, report: Option<&Path>) -> Result<()> {
    let setup = args.setup()?;
    let spec = QuadratureSpec {
        rel_tol,
        abs_tol,
        ..QuadratureSpec::default()
    };
    spec.validate()?;
    let amp = DifferenceAmplitude::new(setup.rho, args.length_km, args.beta2)?;
    let t = setup.detection.window_half_width_ps;
    let reference = oracle_curve(&setup.grid, t, args.eta, &amp, &spec, Execution::default())?;
    let params = RateParams::from_physical(setup.rho, &setup.channel, &setup.detection)?;
    let model: Vec<f64> = setup.grid.iter().map(|&tau| coincidence_rate(tau, &params)).collect();
    let dev = scale_matched_deviation(&setup.grid, &model, reference.values(), 1e-9)?;
    write_dataset(&args.dataset(&setup, reference, "oracle")?, &args.out)?;
    let summary = OracleReport {
        max_scale_matched_deviation_dimensionless: dev.max_relative_deviation,
        tau_at_max_deviation_ps: dev.tau_at_max_ps,
        scale_dimensionless: dev.scale,
        rel_tol_dimensionless: rel_tol,
        abs_tol_dimensionless: abs_tol,
        points_count: setup.grid.len(),
    };
    if let Some(path) = report {
        write_json(&summary, path)?;
    }
    print_json(&summary)
}

fn derive_source(config: &Path, out: &Path) -> Result<()> {
    let cfg: DeriveConfig = read_json(config)?;
    let rel_tol = cfg.epm_rel_tol_dimensionless.unwrap_or(DEFAULT_EPM_REL_TOL);
    let (gs, gi) = derive_gammas(&cfg.source);
    let epm = check_epm(gs, gi, rel_tol)?;
    if !epm.satisfied {
        eprintln!(
            "warning: extended phase matching mismatch {:.3} exceeds {rel_tol}; the Gaussian difference amplitude is approximate",
            epm.mismatch
        );
    }
    let report = DeriveReport {
        epm: EpmReport {
            mismatch_dimensionless: epm.mismatch,
            rel_tol_dimensionless: rel_tol,
            satisfied: epm.satisfied,
        },
        field_level: derive_spectral(&cfg.source, &cfg.filter.with_convention(FilterConvention::FieldLevel))?.into(),
        intensity_level: derive_spectral(
            &cfg.source,
            &cfg.filter.with_convention(FilterConvention::IntensityLevel),
        )?
        .into(),
    };
    write_json(&report, out)
}

fn dataset_file_name(index: usize, label: &str) -> String {
    let safe: String = label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{index:03}_{safe}.csv")
}

fn gen(config: &Path, out_dir: &Path) -> Result<()> {
    let cfg: CampaignConfig = read_json(config)?;
    let datasets = generate_synthetic(&cfg, Execution::default())?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut files = Vec::with_capacity(datasets.len());
    for (k, d) in datasets.iter().enumerate() {
        let name = dataset_file_name(k, &d.label);
        write_dataset(d, &out_dir.join(&name))?;
        files.push(name);
    }
    print_json(&GenReport {
        datasets_count: datasets.len(),
        truth_rho_ps2_inv: cfg.truth_rho()?,
        files,
    })
}

fn fitted_fwhm(d: &Dataset, beta2: f64, rho: f64, eta: f64) -> Option<f64> {
    let tau = d.curve.tau_ps();
    let grid = TauGrid {
        min_ps: tau[0],
        max_ps: tau[tau.len() - 1],
        points: 20_001,
    }
    .values()
    .ok()?;
    let params = d.rate_params(beta2, rho, eta).ok()?;
    let curve = coincidence_curve(&grid, &params, Execution::default()).ok()?;
    extract_fwhm(&curve).ok().map(|r| r.fwhm_ps)
}

fn fit(data_dir: &Path, init: &Path, report: &Path, weighting: WeightingArg, max_iterations: usize) -> Result<bool> {
    let files = read_dataset_dir(data_dir)?;
    ensure!(!files.is_empty(), "no *.csv datasets in {}", data_dir.display());
    let start: FitInit = read_json(init)?;
    let etas = match start.eta_dimensionless {
        EtaInit::Global(e) => vec![e; files.len()],
        EtaInit::PerDataset(v) => {
            ensure!(
                v.len() == files.len(),
                "init has {} eta values for {} datasets",
                v.len(),
                files.len()
            );
            v
        }
    };
    let datasets: Vec<Dataset> = files.iter().map(|(_, d)| d.clone()).collect();
    let options = FitOptions {
        max_iterations,
        weighting: match weighting {
            WeightingArg::Uniform => Weighting::Uniform,
            WeightingArg::Poisson => Weighting::Poisson,
        },
        ..FitOptions::default()
    };
    let params = FitParams {
        beta2_ps2_per_km: start.beta2_ps2_per_km,
        rho_ps2_inv: start.rho_ps2_inv,
        etas,
    };
    let result = lm_fit(&datasets, &params, &options)?;

    let (beta2, rho) = (result.params.beta2_ps2_per_km, result.params.rho_ps2_inv);
    let mut per = Vec::with_capacity(files.len());
    for (k, (path, d)) in files.iter().enumerate() {
        let eta = result.params.etas[k];
        let rho_prime = broadened_rho(rho, &ChannelParams::new(d.fiber_length_km, beta2)?)?;
        let rmsre = result.rmsre[k];
        per.push(DatasetFitReport {
            file: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sha256: file_sha256(path)?,
            label: d.label.clone(),
            fiber_length_km: d.fiber_length_km,
            window_half_width_ps: d.window_half_width_ps,
            points_count: d.curve.len(),
            eta_dimensionless: eta,
            eta_sigma_dimensionless: result.eta_sigmas[k],
            scale_counts: result.scales[k],
            rmsre_dimensionless: rmsre.map(|r| r.value),
            rmsre_points_count: rmsre.map(|r| r.used_points),
            excluded_zero_bins_count: rmsre.map(|r| r.excluded_zero_bins),
            fitted_fwhm_ps: fitted_fwhm(d, beta2, rho, eta),
            oscillation_period_ps: oscillation_period(rho, rho_prime, d.window_half_width_ps).ok(),
        });
    }
    let axes = ["beta2_ps2_per_km".to_string(), "rho_ps2_inv".to_string()]
        .into_iter()
        .chain((0..files.len()).map(|k| format!("eta_{k}_dimensionless")))
        .collect();
    let summary = FitReport {
        converged: result.converged,
        singular: result.singular,
        iterations_count: result.iterations,
        points_count: result.points,
        free_parameters_count: result.free_parameters,
        beta2_ps2_per_km: beta2,
        beta2_sigma_ps2_per_km: result.beta2_sigma_ps2_per_km,
        rho_ps2_inv: rho,
        rho_sigma_ps2_inv: result.rho_sigma_ps2_inv,
        loss_counts2: result.loss,
        loss_history_counts2: result.loss_history,
        condition_number_dimensionless: result.condition_number,
        covariance_axes: axes,
        covariance_in_axis_units: result.covariance,
        weighting: format!("{:?}", options.weighting),
        init_sha256: file_sha256(init)?,
        datasets: per,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    write_json(&summary, report)?;
    if !summary.converged {
        eprintln!(
            "warning: fit did not converge after {} iterations",
            summary.iterations_count
        );
    }
    if summary.singular {
        eprintln!("warning: J^T J is numerically singular; some parameters are not identifiable from these data");
    }
    Ok(summary.converged)
}

fn fwhm(input: &Path, out: &Path) -> Result<()> {
    let curve = read_curve(input)?;
    let r = extract_fwhm(&curve).with_context(|| format!("measuring the dip in {}", input.display()))?;
    write_json(
        &FwhmJson {
            fwhm_ps: r.fwhm_ps,
            baseline_counts: r.baseline,
            minimum_counts: r.minimum,
            tau_at_minimum_ps: r.tau_at_minimum_ps,
            left_crossing_ps: r.left_crossing_ps,
            right_crossing_ps: r.right_crossing_ps,
        },
        out,
    )
}

fn osc_period(rho: f64, beta2: f64, length_km: f64, window_ns: f64) -> Result<()> {
    let window_ps = window_ns * PS_PER_NS;
    DetectionParams::new(window_ps, 0.5)?;
    let rho_prime = broadened_rho(rho, &ChannelParams::new(length_km, beta2)?)?;
    let period = oscillation_period(rho, rho_prime, window_ps)?;
    print_json(&OscillationReport {
        oscillation_period_ps: period,
        rho_ps2_inv: rho,
        rho_prime_ps2_inv: rho_prime,
        window_half_width_ps: window_ps,
    })
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("DISPHOM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("DISPHOM_THREADS must be a positive integer, got `{raw}`"))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Simulate(args) => simulate(&args)?,
        Command::Oracle {
            curve,
            rel_tol,
            abs_tol,
            report,
        } => oracle(&curve, rel_tol, abs_tol, report.as_deref())?,
        Command::DeriveSource { config, out } => derive_source(&config, &out)?,
        Command::Gen { config, out_dir } => gen(&config, &out_dir)?,
        Command::Fit {
            data_dir,
            init,
            report,
            weighting,
            max_iterations,
        } => {
            if !fit(&data_dir, &init, &report, weighting, max_iterations)? {
                return Ok(ExitCode::from(EXIT_NOT_CONVERGED));
            }
        }
        Command::Fwhm { input, out } => fwhm(&input, &out)?,
        Command::OscPeriod {
            rho,
            beta2,
            length_km,
            window_ns,
        } => osc_period(rho, beta2, length_km, window_ns)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
