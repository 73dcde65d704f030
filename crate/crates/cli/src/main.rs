use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use freqlab_cli::{run, CliError, Command, ExperimentConfig};

/// Numerical experiments on frequency functions, Whitney trees and nodal sets.
#[derive(Parser, Debug)]
#[command(name = "freqlab", version, about)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `out` key, then `./out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the config mesh size.
    #[arg(long)]
    mesh_h: Option<f64>,
}

fn execute(args: &Args) -> anyhow::Result<freqlab_cli::Outcome> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if args.mesh_h.is_some() {
        cfg.mesh_h = args.mesh_h;
    }
    let out = args.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    Ok(run(args.command, &cfg, &out)?.into_result()?)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            println!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = e.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            eprintln!("error: {e:#}");
            ExitCode::from(code as u8)
        }
    }
}
