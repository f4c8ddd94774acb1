//! Command-line front end for the experiment harness.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use memcap::experiments::{
    ingest, run_convergence, run_experiment_in, ExperimentConfig, ExperimentKind, NoiseSource, DEFAULT_CONVERGENCE_THRESHOLD,
};
use memcap::Error;

#[derive(Parser)]
#[command(name = "memcap", version, about = "Memory capacity of linear echo state networks under correlated noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Runs whatever experiment the config names.
    Run(RunArgs),
    /// Numeric versus closed-form memory function.
    MfCompare(RunArgs),
    /// mf_compare over a list of topologies.
    TopologySweep(RunArgs),
    /// mf_compare over a list of noise models.
    NoiseSweep(RunArgs),
    /// Large-N capacity over a β–r grid of power-law spectra.
    Heatmap(RunArgs),
    /// Original versus shuffled external noise across network sizes.
    Eeg {
        #[command(flatten)]
        run: RunArgs,
        /// Channel to read; overrides the config's channel.
        #[arg(long)]
        channel: Option<String>,
    },
    /// Input, white-noise and correlated-noise memory split.
    BasisSplit(RunArgs),
    /// Smallest grid size where normalized input capacity settles.
    Convergence {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Parses and validates a config without running it.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
    /// Writes the random-walk surrogate CSV (the same bytes as the bundled copy).
    GenSurrogate {
        #[arg(long)]
        output: PathBuf,
    },
}

fn load(args: &RunArgs, expected: Option<ExperimentKind>) -> Result<(ExperimentConfig, PathBuf), Error> {
    let cfg = ExperimentConfig::load(&args.config)?;
    if let Some(kind) = expected {
        if cfg.experiment != kind {
            return Err(Error::Config(format!("config runs {}, not {}", cfg.experiment.label(), kind.label())));
        }
    }
    let dir = args.output.clone().unwrap_or_else(|| cfg.output_dir());
    Ok((cfg, dir))
}

fn run(args: &RunArgs, expected: Option<ExperimentKind>) -> Result<(), Error> {
    let (cfg, dir) = load(args, expected)?;
    let report = run_experiment_in(&cfg, &dir)?;
    for f in &report.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(a) => run(&a, None),
        Command::MfCompare(a) => run(&a, Some(ExperimentKind::MfCompare)),
        Command::TopologySweep(a) => run(&a, Some(ExperimentKind::TopologySweep)),
        Command::NoiseSweep(a) => run(&a, Some(ExperimentKind::NoiseSweep)),
        Command::Heatmap(a) => run(&a, Some(ExperimentKind::HeatmapBetaR)),
        Command::BasisSplit(a) => run(&a, Some(ExperimentKind::BasisSplit)),
        Command::Eeg { run: a, channel } => {
            let (mut cfg, dir) = load(&a, Some(ExperimentKind::EegCompare))?;
            if let Some(channel) = channel {
                match &mut cfg.noise {
                    Some(NoiseSource::File(f)) => f.channel = channel,
                    _ => return Err(Error::Config("--channel needs a file noise source".into())),
                }
            }
            let report = run_experiment_in(&cfg, &dir)?;
            for f in &report.files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Convergence { run: a, threshold } => {
            let (cfg, dir) = load(&a, None)?;
            let threshold = threshold.or(cfg.convergence_threshold).unwrap_or(DEFAULT_CONVERGENCE_THRESHOLD);
            if !(threshold >= 0.0 && threshold.is_finite()) {
                return Err(Error::Config(format!("threshold {threshold} must be nonnegative")));
            }
            let (n_star, _) = run_convergence(&cfg, &dir, threshold)?;
            println!("N* = {n_star}");
            Ok(())
        }
        Command::ValidateConfig { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            println!("ok: {} (N = {}, {} trials)", cfg.experiment.label(), cfg.reservoir.n, cfg.trials);
            Ok(())
        }
        Command::GenSurrogate { output } => {
            std::fs::write(&output, ingest::surrogate_csv()?)?;
            println!("{}", output.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
