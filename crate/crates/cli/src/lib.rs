//! `qfn`: validate, reduce, verify and simulate quantum feedback networks
//! described in JSON (see [`format`]).
//!
//! Exit codes: 0 pass, 1 validation failure, 2 algebraic loop, 3 parse or
//! usage error. Every command prints one JSON report on stdout.

pub mod commands;
pub mod format;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qfn_core::QfnError;
use serde_json::{json, Value};
use thiserror::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_LOOP: i32 = 2;
pub const EXIT_PARSE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Core(#[from] QfnError),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Core(QfnError::AlgebraicLoop { .. }) => EXIT_LOOP,
            CliError::Core(_) | CliError::Io { .. } => EXIT_INVALID,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse_error",
            CliError::Io { .. } => "io_error",
            CliError::Core(e) => match e {
                QfnError::DimensionMismatch(_) => "dimension_mismatch",
                QfnError::AlgebraicLoop { .. } => "algebraic_loop",
                QfnError::NotUnitaryScattering { .. } => "not_unitary_scattering",
                QfnError::NotHermitian { .. } => "not_hermitian",
                QfnError::NotStarUnitary { .. } => "not_star_unitary",
                QfnError::MalformedStructure(_) => "malformed_structure",
                QfnError::InvalidPartition(_) => "invalid_partition",
                QfnError::InvalidState(_) => "invalid_state",
            },
        }
    }

    /// Failure report in the same shape as a command report.
    pub fn report(&self, command: &str) -> Value {
        let rcond = match self {
            CliError::Core(QfnError::AlgebraicLoop { rcond }) => json!(rcond),
            _ => Value::Null,
        };
        json!({
            "command": command,
            "error": { "kind": self.kind(), "message": self.to_string() },
            "rcond": rcond,
            "pass": false,
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "qfn", version, about = "Quantum feedback network reduction and verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every component triple and the open-loop network.
    Validate(ValidateArgs),
    /// Eliminate the internal connections and write the reduced model.
    Reduce(ReduceArgs),
    /// Seeded random verification of the network identities.
    Check(CheckArgs),
    /// Integrate the master equation of a model.
    Simulate(SimulateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Reduce(_) => "reduce",
            Command::Check(_) => "check",
            Command::Simulate(_) => "simulate",
        }
    }
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    pub file: PathBuf,
    /// Where to write the reduced model; inlined in the report if absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Network whose wiring is checked with random gains.
    #[arg(conflicts_with = "builtin")]
    pub file: Option<PathBuf>,
    /// Use freshly drawn random networks (the default without a file).
    #[arg(long)]
    pub builtin: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub model: PathBuf,
    /// Initial density matrix as a JSON matrix of `[re, im]` pairs.
    #[arg(long)]
    pub rho0: PathBuf,
    #[arg(long = "t")]
    pub t: f64,
    #[arg(long)]
    pub dt: f64,
    #[arg(long)]
    pub tol: Option<f64>,
}

/// A finished command: its report and process exit code.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub report: Value,
    pub code: i32,
}

pub fn run(command: &Command) -> Outcome {
    let result = match command {
        Command::Validate(a) => commands::validate(a),
        Command::Reduce(a) => commands::reduce(a),
        Command::Check(a) => commands::check(a),
        Command::Simulate(a) => commands::simulate(a),
    };
    result.unwrap_or_else(|e| Outcome { report: e.report(command.name()), code: e.exit_code() })
}

/// Parses `args` (including the program name) and runs the command.
/// Usage errors map to [`EXIT_PARSE`]; `--help` and `--version` yield
/// `Err` with the text to print and exit code 0.
pub fn run_args<I, T>(args: I) -> std::result::Result<Outcome, (String, i32)>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => Ok(run(&cli.command)),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_PASS };
            Err((e.render().to_string(), code))
        }
    }
}
