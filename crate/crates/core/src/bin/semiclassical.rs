use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use semiclassical::config::ExperimentConfig;
use semiclassical::runner::{run, Command};

/// Semiclassical entropy and free-energy experiments.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Partition-function squeeze table.
    Partition(Args),
    /// Renormalized entropies of the quantum Gibbs states along an eps sweep.
    EntropyConvergence(Args),
    /// Renormalized free energies and identity ledgers.
    FreeEnergy(Args),
    /// Coherent-state recovery sequence for a Gaussian density.
    GammaUpper(Args),
    /// Relative-entropy growth of coherent lattice states.
    LatticeDivergence(Args),
    /// Structural property suite.
    CheckInvariants(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Validate the config and exit.
    #[arg(long)]
    dry_run: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Partition(a) => (Command::Partition, a),
        Cmd::EntropyConvergence(a) => (Command::EntropyConvergence, a),
        Cmd::FreeEnergy(a) => (Command::FreeEnergy, a),
        Cmd::GammaUpper(a) => (Command::GammaUpper, a),
        Cmd::LatticeDivergence(a) => (Command::LatticeDivergence, a),
        Cmd::CheckInvariants(a) => (Command::CheckInvariants, a),
    };
    if let Ok(n) = std::env::var("SEMICLASSICAL_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: SEMICLASSICAL_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    let cfg = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => ExperimentConfig::from_toml(&text),
            Err(e) => Err(semiclassical::Error::Config(format!("{}: {e}", path.display()))),
        },
        None => Ok(ExperimentConfig::default()),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if args.dry_run {
        println!("config ok (sha256 {})", cfg.hash().unwrap_or_default());
        return ExitCode::SUCCESS;
    }
    match run(cmd, &cfg, args.out.as_deref()) {
        Ok(o) => {
            println!("{}", o.csv.display());
            println!("{}", o.manifest.display());
            if o.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("one or more checks failed; see {}", o.manifest.display());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
