//! Command-line front end around the `optomech` library: static curves,
//! pole sweeps, transfer functions, strain-noise budgets, and Monte Carlo
//! cross-checks of the closed measurement loop, all written as CSV with
//! optional gnuplot companions.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 analysis
//! failure, 3 statistical gate failure.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use config::AppConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration values; exit code 1.
    Config(String),
    /// The requested computation could not be completed; exit code 2.
    Analysis(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(message) => write!(f, "configuration error: {message}"),
            CliError::Analysis(message) => write!(f, "analysis error: {message}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "optomech",
    version,
    about = "Dynamics and quantum-noise analysis of a detuned-cavity position measurement"
)]
struct Cli {
    /// TOML run configuration; defaults are used when absent.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Instrument preset to analyze.
    #[arg(long, global = true, default_value = "reference", value_parser = ["reference"])]
    preset: String,

    /// Output directory (falls back to $OPTOMECH_OUT, then the working
    /// directory).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Override the Monte Carlo seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    dump_config: bool,

    /// Also write a gnuplot script next to each CSV.
    #[arg(long, global = true)]
    plot_script: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Static radiation-pressure force and spring versus tuning.
    Statics,
    /// Pole-zero fits of the closed-loop response across a tuning sweep.
    Poles,
    /// Force-to-detected-power transfer function of the reference design.
    Bode,
    /// Strain-referred noise budget with sprung and free-mass limits.
    Noise,
    /// Monte Carlo check of the analytic closed-loop noise spectrum.
    Simulate,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(error) => {
            let code = match error.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = error.print();
            return ExitCode::from(code);
        }
    };

    let mut config = match &cli.config {
        Some(path) => match AppConfig::load(path) {
            Ok(config) => config,
            Err(message) => {
                eprintln!("configuration error: {message}");
                return ExitCode::from(1);
            }
        },
        None => AppConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.simulate.seed = seed;
    }

    if cli.dump_config {
        print!("{}", config.to_toml());
        return ExitCode::SUCCESS;
    }

    let out_dir = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("OPTOMECH_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    match commands::dispatch(&cli.command, &config, cli.seed, &out_dir, cli.plot_script) {
        Ok(code) => ExitCode::from(code),
        Err(error @ CliError::Config(_)) => {
            eprintln!("{error}");
            ExitCode::from(1)
        }
        Err(error @ CliError::Analysis(_)) => {
            eprintln!("{error}");
            ExitCode::from(2)
        }
    }
}
