//! `ringchain`: desk-scale simulations of photon-pair generation in a chain of
//! add-drop microrings, written out as plot-ready CSV and JSON.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Scenario;
use crate::error::CliError;
use crate::output::OutDir;

#[derive(Parser)]
#[command(name = "ringchain", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Drop-port spectra after 1..=N rings and their FWHM.
    Spectra(Common),
    /// Normalized rate versus chain length for each process.
    Scaling {
        #[command(flatten)]
        common: Common,
        /// Comma-separated columns; all of them by default.
        #[arg(long, value_delimiter = ',')]
        process: Vec<String>,
    },
    /// Per-source spectra, brightness, indistinguishability and pump filtering.
    Jsa(Common),
    /// Fit the drop transmittance to a measured rate curve, or a resonance to a through spectrum.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Rate curve (`N,rate[,sigma]`) or spectrum (`wavelength_nm,transmittance`) CSV.
        #[arg(long)]
        data: PathBuf,
        /// stimulated, spontaneous_cw, spontaneous_pulsed or through_spectrum.
        #[arg(long)]
        process: String,
    },
    /// Large-N behaviour of the lossless-filter partial sums.
    Asymptotic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        nmax: usize,
    },
}

fn prepare(c: &Common) -> Result<(Scenario, OutDir), CliError> {
    let sc = Scenario::load(&c.config)?;
    let out = OutDir::create(&c.out)?;
    Ok((sc, out))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectra(c) => {
            let (sc, out) = prepare(&c)?;
            commands::spectra(&sc, &out)
        }
        Command::Scaling { common, process } => {
            let cols = commands::parse_scaling_columns(&process)?;
            let (sc, out) = prepare(&common)?;
            commands::scaling(&sc, &out, &cols)
        }
        Command::Jsa(c) => {
            let (sc, out) = prepare(&c)?;
            commands::jsa(&sc, &out)
        }
        Command::Fit { common, data, process } => {
            let (sc, out) = prepare(&common)?;
            let text = commands::fit(&sc, &out, &data, &process)?;
            print!("{text}");
            Ok(())
        }
        Command::Asymptotic { common, nmax } => {
            let (sc, out) = prepare(&common)?;
            commands::asymptotic(&sc, &out, nmax)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ringchain: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
