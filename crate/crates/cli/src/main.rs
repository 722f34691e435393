mod backends;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{bench, dataset, distill, eval, run, train};

/// A usage problem (bad flag value, bad config file); exits with status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Debug, Parser)]
#[command(name = "maskwatch", version, about = "Face-mask detection toolkit")]
struct Cli {
    /// Flat TOML file of default option values; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build, split and pseudo-label dataset manifests.
    #[command(subcommand)]
    Dataset(dataset::DatasetCmd),
    /// Train a classifier.
    #[command(subcommand)]
    Train(train::TrainCmd),
    /// Distill a trained teacher into a smaller student.
    Distill(distill::DistillArgs),
    /// Evaluate a classifier or detector outputs.
    #[command(subcommand)]
    Eval(eval::EvalCmd),
    /// Measure model-only throughput.
    Bench(bench::BenchArgs),
    /// Run a pipeline over a frame sequence.
    Run(run::RunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Dataset(c) => c.name(),
            Command::Train(_) => "train classifier",
            Command::Distill(_) => "distill",
            Command::Eval(c) => c.name(),
            Command::Bench(_) => "bench",
            Command::Run(_) => "run",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let name = cli.command.name();
    let result = config::Resolver::from_cli(cli.config.as_deref()).and_then(|mut resolver| match cli.command {
        Command::Dataset(c) => dataset::execute(c, &mut resolver),
        Command::Train(c) => train::execute(c, &mut resolver),
        Command::Distill(a) => distill::execute(a, &mut resolver),
        Command::Eval(c) => eval::execute(c, &mut resolver),
        Command::Bench(a) => bench::execute(a, &mut resolver),
        Command::Run(a) => run::execute(a, &mut resolver),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = format!("{e:#}").replace('\n', " ");
            eprintln!("maskwatch {name}: {message}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
