use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qinverse::experiment::{error_json, run};
use qinverse::{Error, ExperimentConfig, Mode};

#[derive(Parser)]
#[command(version, about = "Forward model, simulation and amplitude reconstruction for a von Neumann pointer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Path amplitudes, reading density and cell probabilities
    Forward(RunArgs),
    /// Sample pointer readings and count them per cell
    Simulate(RunArgs),
    /// Sample, reconstruct the amplitudes and write the convergence trace
    Reconstruct(RunArgs),
    /// Conditioning and arrival probability over a range of pointer widths
    Sweep(RunArgs),
    /// Reconstruct the state at the coupling time
    Tomography(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed in the config
    #[arg(long)]
    seed: Option<u64>,
    /// Re-solve the trace after this many new trials
    #[arg(long)]
    trace_every: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Forward(a) => (Mode::Forward, a),
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Reconstruct(a) => (Mode::Reconstruct, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::Tomography(a) => (Mode::Tomography, a),
    };
    match execute(mode, &args) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let json = error_json(&err);
            eprintln!("{json}");
            if std::fs::create_dir_all(&args.out).is_ok() {
                let _ = std::fs::write(args.out.join("error.json"), format!("{json}\n"));
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn execute(mode: Mode, args: &RunArgs) -> Result<Vec<PathBuf>, Error> {
    let mut config = ExperimentConfig::load(&args.config)?;
    config.mode = mode;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(every) = args.trace_every {
        if every == 0 {
            return Err(Error::Config {
                line: 0,
                field: "trace_every".into(),
                message: "must be at least 1".into(),
            });
        }
        config.trace_every = every;
    }
    run(&config, &args.out)
}
