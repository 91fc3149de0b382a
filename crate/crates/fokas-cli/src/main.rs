use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fokas_cli::{run, CliError, Overrides, RunConfig};

/// Evaluate the unified transform solution of q_t + q_xxx = h.
#[derive(Debug, Parser)]
#[command(name = "fokas", version)]
struct Args {
    /// Run configuration (key = value lines under [section] headers).
    #[arg(long)]
    config: PathBuf,
    /// solve, benchmark, sweep, zeros or validate-contour.
    #[arg(long)]
    mode: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "theta-max")]
    theta_max: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Seed for the random test points of validate-contour.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))
        .and_then(|text| {
            let overrides = Overrides {
                mode: args.mode,
                out: args.out,
                theta_max: args.theta_max,
                eta: args.eta,
                beta: args.beta,
                seed: args.seed,
            };
            RunConfig::parse(&text, &overrides)
        })
        .and_then(|cfg| run(&cfg));
    match outcome {
        Ok(o) => {
            println!("{}", o.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fokas: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
