use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod fit;
mod prior;
mod run;
mod svg;
mod tasks;

/// Elicit an agent's prior by iterated learning.
#[derive(Parser)]
#[command(name = "iterprior", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// List the builtin tasks.
    Tasks {
        /// Also list tasks from this TOML file.
        #[arg(long)]
        task_file: Option<PathBuf>,
    },
    /// Run an ensemble of chains and write records and diagnostics.
    Run(run::RunArgs),
    /// Estimate the prior from a finished run.
    Prior(prior::PriorArgs),
    /// Score causal judgments against one or more priors.
    Fit(fit::FitArgs),
}

/// Failure with its exit status: 2 for bad invocations, 1 otherwise.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(String),
}

impl CliError {
    pub fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn failed(e: impl std::fmt::Display) -> Self {
        CliError::Failed(e.to_string())
    }
}

impl From<iterprior::Error> for CliError {
    fn from(e: iterprior::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Writes `text` to stdout. A closed pipe is not an error.
pub fn emit(text: &str) -> CliResult<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Tasks { task_file } => tasks::list(task_file.as_deref()),
        Command::Run(args) => run::run(args),
        Command::Prior(args) => prior::prior(args),
        Command::Fit(args) => fit::fit(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
