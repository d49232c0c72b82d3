//! `diabolo` command-line tool.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "diabolo", version, about = "Diabolo and string simulator")]
struct Cli {
    /// TOML configuration file; `DIABOLO__SECTION__KEY` variables override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random draw (overrides the configured seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Roll the predictor out along a motion template or a recorded trace.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, conflicts_with = "trace")]
        template: Option<String>,
        /// Replay the sticks of a recorded trace from its first state.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Search a stick trajectory whose rollout meets goal waypoints.
    Optimize {
        #[arg(long)]
        out: PathBuf,
        /// TOML goal file; the template's default goals when absent.
        #[arg(long)]
        goals: Option<PathBuf>,
        /// Template of the seed trajectory.
        #[arg(long)]
        template: Option<String>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Prediction-error curves and per-class means over a trace directory.
    Evaluate {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        stride: Option<f64>,
    },
    /// Fit model constants to a trace directory.
    Calibrate {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        stride: Option<f64>,
    },
    /// Write synthetic traces with ground truth.
    Generate {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// One template; all when absent.
        #[arg(long)]
        template: Option<String>,
        #[arg(long)]
        duration: Option<f64>,
        /// Traces per template, with seeds `seed, seed+1, ...`.
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = config::load(cli.config.as_deref(), std::env::vars())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let ctx = Context {
        config,
        config_path: cli.config,
    };
    match cli.command {
        Command::Simulate {
            out,
            template,
            trace,
            duration,
        } => commands::simulate(&ctx, &out, template.as_deref(), trace.as_deref(), duration),
        Command::Optimize {
            out,
            goals,
            template,
            duration,
        } => commands::optimize_cmd(&ctx, &out, goals.as_deref(), template.as_deref(), duration),
        Command::Evaluate {
            traces,
            out,
            horizon,
            stride,
        } => commands::evaluate(&ctx, &traces, &out, horizon, stride),
        Command::Calibrate {
            traces,
            out,
            horizon,
            stride,
        } => commands::calibrate(&ctx, &traces, &out, horizon, stride),
        Command::Generate {
            out,
            template,
            duration,
            count,
        } => commands::generate(&ctx, &out, template.as_deref(), duration, count),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
