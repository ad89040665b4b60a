//! Command-line front end for the Dirichlet-form laboratory.

use std::path::PathBuf;
use std::process::ExitCode;

use bernoulli_dirichlet::cli::{run_command, Command, ExperimentConfig};
use clap::builder::PossibleValuesParser;
use clap::Parser;

#[derive(Debug, Parser)]
#[command(
    name = "bdlab",
    version,
    about = "Numerical checks for the w-energy Dirichlet form on Bernoulli functionals"
)]
struct Args {
    /// Experiment to run.
    #[arg(value_parser = PossibleValuesParser::new(Command::ALL.map(Command::name)))]
    command: String,
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving the CSV reports and summary.txt.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the summary on stdout.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let run = || -> bernoulli_dirichlet::Result<bool> {
        let command: Command = args.command.parse()?;
        let mut cfg = ExperimentConfig::from_path(&args.config)?;
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        let outcome = run_command(command, &cfg, &args.out)?;
        if !args.quiet {
            print!("{}", outcome.summary);
        }
        Ok(outcome.passed)
    };
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("bdlab: {e}");
            ExitCode::from(2)
        }
    }
}
