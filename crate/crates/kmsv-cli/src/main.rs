use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kmsv_cli::config::{load_config, Overrides};
use kmsv_cli::{exit_code, pipeline};

/// Multi-task regression experiments with rank-targeted spectral penalties.
#[derive(Parser)]
#[command(name = "kmsv", version, about)]
struct Cli {
    /// Experiment configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Emit SVG plots (eval only).
    #[arg(long, global = true)]
    plot: bool,

    /// Worker threads for per-task updates (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Z-score features using training statistics.
    #[arg(long, global = true)]
    standardize: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured synthetic dataset and write it as CSV.
    Synth,
    /// Fit every configured method for each training rate and repetition.
    Fit,
    /// Evaluate fitted models and write metric CSVs (and plots with --plot).
    Eval,
    /// Aggregate repetition summaries into report.csv.
    Report,
}

fn run(cli: Cli) -> kmsv::Result<()> {
    if let Some(threads) = cli.threads {
        // ignore failure: the global pool can only be sized once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let config_path = cli
        .config
        .ok_or_else(|| kmsv::Error::InvalidParameter("--config <path> is required".into()))?;
    let overrides = Overrides {
        seed: cli.seed,
        output_dir: cli.out,
        standardize: cli.standardize,
    };
    let cfg = load_config(&config_path, &overrides)?;
    match cli.command {
        Command::Synth => pipeline::cmd_synth(&cfg),
        Command::Fit => pipeline::cmd_fit(&cfg),
        Command::Eval => pipeline::cmd_eval(&cfg, cli.plot),
        Command::Report => pipeline::cmd_report(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
