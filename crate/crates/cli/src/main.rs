#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use vibronic_core::ModeSelection;

mod config;
mod csv;
mod tasks;

use config::{RunConfig, Task};

/// Vibronic ground states, Wigner functions and Born–Oppenheimer surfaces of
/// Rydberg atoms in optical tweezers.
#[derive(Debug, Parser)]
#[command(name = "vibronic", version)]
struct Cli {
    task: Task,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "reduced")]
    modes: Modes,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Modes {
    Reduced,
    Full,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let config = RunConfig::load(&cli.config)?;
    if let Some(t) = config.task {
        if t != cli.task {
            anyhow::bail!(
                "config task {} does not match requested task {}",
                t.name(),
                cli.task.name()
            );
        }
    }
    tasks::run(&tasks::Run {
        config,
        task: cli.task,
        out: cli.out,
        modes: match cli.modes {
            Modes::Reduced => ModeSelection::Reduced,
            Modes::Full => ModeSelection::Full,
        },
    })
}
