//! Command-line front end.
//!
//! Exit codes: 0 success, 1 property/hypothesis assertion failure, 2
//! configuration error (including argument parsing), 3 numerical failure.
//! `LOGWELL_WORKERS` caps the classification worker pool; outputs are
//! deterministic and in grid order regardless of the pool size.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use logwell::{DomainSpec, ModelParams, SolverConfig, WellAnalysis};

use logwell_cli::commands::{self, SweepGrid};
use logwell_cli::config::{AnalysisSettings, ExperimentConfig, InitialData};
use logwell_cli::presets::{analyze_preset, generate_preset_with, PresetId};
use logwell_cli::verify::run_verify;
use logwell_cli::{load_config, CliError};

#[derive(Parser)]
#[command(
    name = "logwell",
    version,
    about = "Potential-well analysis and spectral simulation of a logarithmic \
             pseudo-parabolic equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate well constants and the depth curve; writes constants.json
    /// and well_curve.csv.
    Analyze(CommonArgs),
    /// Integrate the configured initial data; writes trajectory.csv and
    /// summary.json.
    Simulate(CommonArgs),
    /// Classify the configured initial data; writes report.json.
    Classify(CommonArgs),
    /// Classify an amplitude sweep of the configured data; writes sweep.csv
    /// and sweep.json.
    Sweep(SweepArgs),
    /// Run the property suites; writes verify.json and prints it to stdout.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration file.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario instead of a config file: S1_subcritical_decay,
    /// S2_subcritical_blowup, S3_critical, S4_high_energy_blowup, or
    /// S5_supercritical_global.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Seed override: the analysis sampling seed with --config, the
    /// data-noise seed with --preset (0 keeps the textbook data).
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    /// Override the number of ray directions sampled by the analysis.
    #[arg(long, value_name = "INT")]
    budget: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Smallest amplitude.
    #[arg(long, default_value_t = 0.05)]
    min: f64,
    /// Largest amplitude.
    #[arg(long, default_value_t = 5.0)]
    max: f64,
    /// Number of log-spaced amplitudes.
    #[arg(long, default_value_t = 32)]
    points: usize,
    /// Also integrate each amplitude and fill the outcome column.
    #[arg(long)]
    simulate: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Flip a sign inside the combination-identity recombination; the run
    /// must then fail with exit code 1.
    #[arg(long)]
    inject_fault: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_workers() {
        eprintln!("{e}");
        return ExitCode::from(e.exit_code());
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Applies `LOGWELL_WORKERS` to the global worker pool before any parallel
/// work runs.
fn init_workers() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("LOGWELL_WORKERS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .map_err(|_| CliError::Config(format!("LOGWELL_WORKERS must be a positive integer, got `{raw}`")))?;
    if n == 0 {
        return Err(CliError::Config(
            "LOGWELL_WORKERS must be a positive integer, got `0`".into(),
        ));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))
}

/// Loads the experiment from `--config` or `--preset` and runs the analysis
/// exactly once.
fn resolve(args: &CommonArgs, config_required: bool) -> Result<(ExperimentConfig, WellAnalysis), CliError> {
    if let Some(name) = &args.preset {
        let id = PresetId::parse(name).ok_or_else(|| {
            CliError::Config(format!(
                "unknown preset `{name}`; expected one of {}",
                PresetId::ALL
                    .iter()
                    .map(|id| id.name())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })?;
        let analysis = analyze_preset(id)?;
        let scenario = generate_preset_with(id, args.seed.unwrap_or(0), &analysis)?;
        let mut config = scenario.config;
        if let Some(directions) = args.budget {
            config.analysis.budget.directions = directions;
        }
        return Ok((config, analysis));
    }
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None if config_required => {
            return Err(CliError::Config(
                "either --config or --preset is required".into(),
            ))
        }
        // `verify` exercises properties of the operators, not of any
        // particular data, so it runs on a default frame when unconfigured.
        None => default_frame(),
    };
    if let Some(seed) = args.seed {
        config.analysis.seed = seed;
    }
    if let Some(directions) = args.budget {
        config.analysis.budget.directions = directions;
    }
    let analysis = commands::analyze(&config)?;
    Ok((config, analysis))
}

/// Unit interval at resolution 128 with `p = 3`: the frame `verify` uses
/// when no configuration is given.
fn default_frame() -> ExperimentConfig {
    let domain = DomainSpec::line(1.0, 128).expect("static frame is valid");
    let params = ModelParams::new(3.0).expect("static frame is valid");
    ExperimentConfig {
        domain,
        params,
        initial: InitialData {
            modes: vec![(vec![1], 0.05)],
            random_seed: None,
            random_modes: 8,
            random_amplitude: 0.1,
        },
        solver: SolverConfig::default(),
        analysis: AnalysisSettings::default(),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(args) => {
            let (config, analysis) = resolve(&args, true)?;
            let doc = commands::run_analyze(&config, &analysis, &args.out)?;
            println!(
                "analyze: d_hat = {:.12}, delta0 = {:.12}, c_eff = {:.12} -> {}",
                doc.d_hat,
                doc.delta0,
                doc.c_eff,
                args.out.display()
            );
        }
        Command::Simulate(args) => {
            let (config, analysis) = resolve(&args, true)?;
            let doc = commands::run_simulate(&config, &analysis, &args.out)?;
            println!(
                "simulate: {} at t = {:.6} after {} steps ({} rejected), regime {} -> {}",
                doc.outcome,
                doc.t_last,
                doc.steps_accepted,
                doc.steps_rejected,
                doc.regime,
                args.out.display()
            );
        }
        Command::Classify(args) => {
            let (config, analysis) = resolve(&args, true)?;
            let report = commands::run_classify(&config, &analysis, &args.out)?;
            println!(
                "classify: {:?} (J0 = {:.12}, I0 = {:.12}, d_hat = {:.12}) -> {}",
                report.regime,
                report.j0,
                report.i0,
                report.d_hat,
                args.out.display()
            );
        }
        Command::Sweep(args) => {
            let (config, analysis) = resolve(&args.common, true)?;
            let grid = SweepGrid {
                min: args.min,
                max: args.max,
                points: args.points,
                simulate: args.simulate,
            };
            let doc = commands::run_sweep(&config, &analysis, &grid, &args.common.out)?;
            println!(
                "sweep: {} amplitudes, last decay {:?}, first blow-up {:?} -> {}",
                doc.rows.len(),
                doc.last_decay_amplitude,
                doc.first_blowup_amplitude,
                args.common.out.display()
            );
        }
        Command::Verify(args) => {
            let (config, analysis) = resolve(&args.common, false)?;
            let report = run_verify(&config, &analysis, args.inject_fault, &args.common.out)?;
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Config(format!("cannot serialize the report: {e}")))?;
            println!("{text}");
            if !report.passed {
                let failed: Vec<&str> = report
                    .properties
                    .iter()
                    .filter(|p| !p.passed)
                    .map(|p| p.name.as_str())
                    .collect();
                return Err(CliError::Assertion(format!(
                    "property suites failed: {}",
                    failed.join(", ")
                )));
            }
        }
    }
    Ok(())
}
