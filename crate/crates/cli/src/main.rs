use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sfn_cli::{run_experiment, CliError, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "sfn", version, about = "Saddle-free Newton experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one optimizer and write its trajectory.
    Optimize(Common),
    /// Run several optimizers from the same start, per model size.
    Compare(Common),
    /// Sample critical points and their Hessian spectra.
    CriticalPoints(Common),
    /// Histogram the Hessian spectrum at the start or a nearby critical point.
    Spectrum(Common),
    /// Random hyperparameter search for momentum SGD.
    Search(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
}

fn execute(kind: ExperimentKind, args: Common) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    if let Some(n) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let cfg = cfg.resolve(kind)?;
    run_experiment(&cfg, &cfg.output_dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Optimize(a) => (ExperimentKind::Optimize, a),
        Command::Compare(a) => (ExperimentKind::Compare, a),
        Command::CriticalPoints(a) => (ExperimentKind::CriticalPoints, a),
        Command::Spectrum(a) => (ExperimentKind::Spectrum, a),
        Command::Search(a) => (ExperimentKind::Search, a),
    };
    match execute(kind, args) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
