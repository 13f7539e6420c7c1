use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ionmem_cli::{run, workers_from_env, CliError, Command};

#[derive(Parser)]
#[command(name = "ionmem", version, about = "Trapped-ion qubit memory simulations")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate field-independent points of every transition
    ClockScan(RunArgs),
    /// Ramsey phase scans and contrast decay
    Ramsey(RunArgs),
    /// Two-ion decoherence-free-subspace lifetime
    Dfs(RunArgs),
    /// Transition frequency against field near the operating point
    Parabola(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Master seed; defaults to the scenario's `seed`, else 0
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = workers_from_env()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    let (command, args) = match cli.command {
        Cmd::ClockScan(a) => (Command::ClockScan, a),
        Cmd::Ramsey(a) => (Command::Ramsey, a),
        Cmd::Dfs(a) => (Command::Dfs, a),
        Cmd::Parabola(a) => (Command::Parabola, a),
    };
    run(command, &args.config, args.seed, &args.out)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ionmem: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
