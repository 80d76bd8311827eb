use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use natherm_cli::{execute, CliError, ExperimentTag, Overrides, RunConfig};

/// Thermalization experiments on long-range spin chains.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Experiment to run; may also come from the config file.
    #[arg(value_enum)]
    tag: Option<ExperimentTag>,
    /// Same as the positional tag.
    #[arg(long, value_enum)]
    experiment: Option<ExperimentTag>,
    /// TOML file of run parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: Args) -> Result<(), CliError> {
    let experiment = match (args.tag, args.experiment) {
        (Some(a), Some(b)) if a != b => return Err(CliError::config("experiment", format!("positional `{}` contradicts --experiment `{}`", a.label(), b.label()))),
        (a, b) => a.or(b),
    };
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    config.apply(&Overrides { experiment, seed: args.seed, out: args.out });
    let settings = config.resolve()?;
    let manifest = execute(&settings)?;
    println!("{} finished in {:.2} s; outputs in {}", manifest.experiment, manifest.runtime_seconds, settings.out.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
