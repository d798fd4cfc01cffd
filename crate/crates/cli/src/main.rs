use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use peerfx::io::{dispatch, Command, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    /// Adjacency spectral embedding of the network.
    Embed,
    /// Latent space model fit with optional edge covariates.
    FitNet,
    /// Simulation goodness of fit for the candidate network models.
    Gof,
    /// Latent-adjusted (or naive) multivariate 2SLS with Wald table.
    Estimate,
    /// Monte Carlo study over a simulation scenario.
    Mc,
    /// Cross-fitted logistic prediction with AUC and variable importance.
    Predict,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Embed => Command::Embed,
            Cmd::FitNet => Command::FitNet,
            Cmd::Gof => Command::Gof,
            Cmd::Estimate => Command::Estimate,
            Cmd::Mc => Command::Mc,
            Cmd::Predict => Command::Predict,
        }
    }
}

/// Multivariate peer-effect estimation on endogenously formed networks.
///
/// Exit codes: 0 success, 2 configuration, 3 input validation,
/// 4 identification, 5 numerical failure, 6 I/O, 7 output already exists.
#[derive(Debug, Parser)]
#[command(name = "peerfx", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Run directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let command = Command::from(cli.command);
    let result = RunConfig::load(&cli.config).and_then(|mut cfg| {
        if cli.seed.is_some() {
            cfg.seed = cli.seed;
        }
        let out = cli
            .out
            .clone()
            .or_else(|| cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from(format!("peerfx-{}", command.name())));
        dispatch(command, &cfg, &out).map(|m| (m, out))
    });
    match result {
        Ok((manifest, out)) => {
            println!("{} finished; {} outputs in {}", manifest.command, manifest.outputs.len(), out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("peerfx: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
