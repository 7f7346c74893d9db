use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod curate;
mod eval;
mod failure;
mod pdp;
mod plot;
mod synth;

use failure::Failure;

/// Painting-process video curation and perceptual distance profiles.
#[derive(Debug, Parser)]
#[command(name = "pb", version)]
struct Cli {
    /// Worker threads for parallel stages (defaults to all cores).
    #[arg(long, global = true, env = "PB_JOBS")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trim, crop, de-occlude and sample a painting video into keyframes.
    Curate(curate::Args),
    /// Score a generated process against ground truth with the PDP metric.
    Pdp(pdp::Args),
    /// Evaluate paired generated and ground-truth videos.
    Eval(eval::Args),
    /// Generate a synthetic painting process from a script.
    Synth(synth::Args),
    /// Draw distance profile CSVs as an SVG chart.
    Plot(plot::Args),
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::input("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::runtime(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Curate(a) => curate::run(a),
        Command::Pdp(a) => pdp::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Synth(a) => synth::run(a),
        Command::Plot(a) => plot::run(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
