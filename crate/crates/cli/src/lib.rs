//! Command-line runner for the coupled NLS soliton experiments.

pub mod config;
pub mod experiments;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{describe, parse_config, Kind};
use output::{run_dir, write_atomic, RunWriter, Status};

/// Failure of a run after its configuration was accepted.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Fault(String),
    #[error(transparent)]
    Core(#[from] cnls::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn status(&self) -> Status {
        match self {
            CliError::Input(_) => Status::InputError,
            CliError::Core(
                cnls::Error::InvalidParameter(_)
                | cnls::Error::TailViolation { .. }
                | cnls::Error::InvalidGrid(_),
            ) => Status::InputError,
            _ => Status::NumericalFault,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cnls", about = "Coupled NLS soliton interaction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Interaction constants and the profile A
    Constants(RunArgs),
    /// Operator identities and smallest eigenvalues
    Operators(RunArgs),
    /// Measured projections of F and G against the leading-order laws
    Projections(RunArgs),
    /// Reduced ODE trajectories and regime scans
    Reduce(RunArgs),
    /// Full PDE run from ansatz initial data
    Simulate(RunArgs),
    /// PDE run judged against the separation law
    Regime(RunArgs),
    /// Log-law fit of a trajectory CSV
    Fit(RunArgs),
    /// Print the configuration keys of an experiment
    Keys { kind: Kind },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Configuration file of `key = value` lines
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Parent directory of run directories
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

/// Parses `args`, runs the experiment and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Status::InputError.exit_code() } else { 0 };
        }
    };
    let (kind, args) = match cli.command {
        Command::Constants(a) => (Kind::Constants, a),
        Command::Operators(a) => (Kind::Operators, a),
        Command::Projections(a) => (Kind::Projections, a),
        Command::Reduce(a) => (Kind::Reduce, a),
        Command::Simulate(a) => (Kind::Simulate, a),
        Command::Regime(a) => (Kind::Regime, a),
        Command::Fit(a) => (Kind::Fit, a),
        Command::Keys { kind } => {
            print!("{}", describe(kind));
            return 0;
        }
    };
    execute(kind, &args)
}

fn execute(kind: Kind, args: &RunArgs) -> i32 {
    let text = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("cannot read {}: {e}", path.display());
                return Status::InputError.exit_code();
            }
        },
        None => String::new(),
    };
    let config = match parse_config(kind, &text, &args.set) {
        Ok(c) => c,
        Err(errors) => {
            eprintln!("invalid {} configuration:", kind.name());
            eprintln!("{errors}");
            return Status::InputError.exit_code();
        }
    };
    let dir = run_dir(&args.out, &config);
    let mut writer = match RunWriter::create(dir.clone()) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("cannot create {}: {e}", dir.display());
            return Status::NumericalFault.exit_code();
        }
    };
    let (status, message) = match experiments::run_experiment(&config, &mut writer) {
        Ok(outcome) => (outcome.status, outcome.message),
        Err(e) => {
            let message = e.to_string();
            let _ = write_atomic(&dir.join("diagnostic.txt"), format!("{message}\n").as_bytes());
            (e.status(), message)
        }
    };
    if let Err(e) = writer.finish(&config, status, Some(&message)) {
        eprintln!("cannot write the manifest: {e}");
        return Status::NumericalFault.exit_code();
    }
    let label = match status {
        Status::Pass => "pass",
        Status::ToleranceFailure => "tolerance failure",
        Status::InputError => "input error",
        Status::NumericalFault => "numerical fault",
    };
    println!("{}: {label}: {message}", dir.display());
    if status != Status::Pass {
        eprintln!("{label}: {message}");
    }
    status.exit_code()
}
