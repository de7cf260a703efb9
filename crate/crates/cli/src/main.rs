//! `multiwell`: command-line driver for the N-mode toolkit.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use multiwell::{Error, Result};

use commands::Run;
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "multiwell", version, about = "N-mode reduction of a nonlinear Schrödinger equation in an N-well potential")]
struct Cli {
    /// JSON run configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_path`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Linear coupling spectrum, closed form against numeric.
    Spectrum,
    /// Symmetric four-well families over q for each sigma, with folds.
    StationarySweep,
    /// Continue every linear mode in eta and locate bifurcations.
    Branches,
    /// All stationary states at one eta.
    Census,
    /// Symmetry-breaking point of the ground state for several N.
    BifTable,
    /// Time evolution of the N-mode system.
    Evolve,
    /// Finite-difference check of the mode basis for a 1D chain of wells.
    Linear1d,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::StationarySweep => "stationary-sweep",
            Command::Branches => "branches",
            Command::Census => "census",
            Command::BifTable => "bif-table",
            Command::Evolve => "evolve",
            Command::Linear1d => "linear1d",
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) if !path.exists() => {
            return Err(Error::Parameter(format!("config file {} does not exist", path.display())))
        }
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.output_path = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Error::Parameter("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    }
    let config = resolve(&cli)?;
    let run = Run::new(config, cli.command.name())?;
    match cli.command {
        Command::Spectrum => commands::spectrum(&run),
        Command::StationarySweep => commands::stationary_sweep(&run),
        Command::Branches => commands::branches(&run),
        Command::Census => commands::census(&run),
        Command::BifTable => commands::bif_table(&run),
        Command::Evolve => commands::evolve(&run),
        Command::Linear1d => commands::linear1d(&run),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
