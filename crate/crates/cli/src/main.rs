// SPDX-License-Identifier: Apache-2.0
use std::path::PathBuf;
use std::process::ExitCode;

use brokenpt::SuiteProfile;
use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;

use config::{Config, Run};

#[derive(Parser)]
#[command(name = "brokenpt", version, about = "Dyson maps and invariants for a 2D non-Hermitian oscillator")]
struct Cli {
    /// TOML or JSON configuration; the bundled reference config when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Fock cutoff preset; overrides `oracle.cutoff`.
    #[arg(long, global = true, value_enum)]
    profile: Option<ProfileArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Fast,
    Slow,
}

#[derive(Subcommand)]
enum Command {
    /// Time series of γ, β, f±, energy and the Dyson residual.
    Evolve,
    /// Static-model spectra and the exceptional-point report.
    Spectrum,
    /// Mode wavefunctions on a spatial grid.
    Modes,
    /// Truncated-Fock residual report.
    Oracle,
    /// Full property suite; nonzero exit when any check fails.
    Validate,
    /// Print the bundled configuration.
    DefaultConfig,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::DefaultConfig = cli.command {
        print!("{}", config::BUNDLED);
        return ExitCode::SUCCESS;
    }
    let profile = cli.profile.map(|p| match p {
        ProfileArg::Fast => SuiteProfile::Fast,
        ProfileArg::Slow => SuiteProfile::Slow,
    });
    let run = match Config::load(cli.config.as_deref()).and_then(|c| Run::new(c, profile)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = cli.out.or_else(|| run.config.output.dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let result = match cli.command {
        Command::Evolve => commands::evolve(&run, &out),
        Command::Spectrum => commands::spectrum(&run, &out),
        Command::Modes => commands::modes(&run, &out),
        Command::Oracle => commands::oracle(&run, &out),
        Command::Validate => commands::validate(&run, &out),
        Command::DefaultConfig => unreachable!(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
