#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

mod check;
mod config;
mod error;
mod model;
mod run;
mod setup;

use config::{parse_config, Command};
use error::CliError;

#[derive(Parser)]
#[command(name = "roughwave", version, about = "Wave solves, seismograms, gradients and checks for rough media")]
struct Args {
    /// simulate | forward | gradient | check | study
    command: String,

    #[arg(long)]
    config: PathBuf,

    /// Worker threads for independent solves
    #[arg(long)]
    jobs: Option<usize>,

    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed for randomized checks (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(args: &Args) -> Result<run::Outcome, CliError> {
    let command = Command::parse(&args.command)?;
    let mut cfg = parse_config(&args.config)?;
    cfg.command = command;
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = args.jobs {
        if j == 0 {
            return Err(CliError::Validation("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    pool.install(|| run::run(&cfg))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match execute(&args) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            if outcome.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("failed: {}", outcome.failures.join(", "));
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
