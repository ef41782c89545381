//! `fixout` command-line front end.
//!
//! Exit codes: 0 success, 1 internal error, 2 configuration error,
//! 3 data error. Outputs are written only after a command succeeds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod data;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigError, Options, RunConfig};

#[derive(Parser)]
#[command(version, about = "Assess and repair process fairness of classifiers", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated fairness assessments with a verdict summary
    Assess(Options),
    /// Assessment followed by the dropout-ensemble repair when unfair
    Fix(Options),
    /// Pearson correlation of every feature pair
    Corr(Options),
    /// Average k and unfair count for each kurtosis threshold
    FindkSweep(Options),
    /// Train/test split with optional SMOTE, or class balancing for text
    Prep(Options),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<fixout::Error>() {
        Some(e) if e.is_data_error() => 3,
        Some(fixout::Error::InvalidArgument(_) | fixout::Error::UnknownFeature(_)) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (opts, action): (_, fn(&RunConfig) -> anyhow::Result<output::Outputs>) = match &cli.command {
        Command::Assess(o) => (o, commands::assess),
        Command::Fix(o) => (o, commands::fix),
        Command::Corr(o) => (o, commands::corr),
        Command::FindkSweep(o) => (o, commands::findk_sweep),
        Command::Prep(o) => (o, commands::prep),
    };
    let cfg = RunConfig::from_options(opts)?;
    let outputs = action(&cfg)?;
    for path in outputs.commit(&cfg.out)? {
        log::info!("wrote {}", path.display());
    }
    println!("results in {}", cfg.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
