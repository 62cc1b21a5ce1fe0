use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pavg_cli::{parse_config, run, Command, Overrides, RunError};

/// Partial-averaging path integral estimators, studies and oracles.
#[derive(Parser, Debug)]
#[command(name = "pavg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Density matrix element at one series order.
    Rho(Args),
    /// Partition function at one series order.
    Z(Args),
    /// Convergence study over a schedule of orders, with verdicts.
    Study(Args),
    /// Kato-class functional over a list of time cutoffs.
    Kato(Args),
    /// One-dimensional grid reference kernels.
    Oracle(Args),
}

#[derive(clap::Args, Debug)]
struct Args {
    /// TOML configuration file.
    config: PathBuf,
    /// Override sampler.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override sampler.n_samples.
    #[arg(long)]
    samples: Option<u64>,
    /// Override output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("PAVG_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("PAVG_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let (command, args) = match cli.command {
        Sub::Rho(a) => (Command::Rho, a),
        Sub::Z(a) => (Command::Z, a),
        Sub::Study(a) => (Command::Study, a),
        Sub::Kato(a) => (Command::Kato, a),
        Sub::Oracle(a) => (Command::Oracle, a),
    };
    let outcome = std::fs::read_to_string(&args.config)
        .map_err(RunError::from)
        .and_then(|text| {
            let overrides = Overrides { seed: args.seed, samples: args.samples, out: args.out };
            Ok(parse_config(&text, command, &overrides)?)
        })
        .and_then(|cfg| run(&cfg));
    match outcome {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
