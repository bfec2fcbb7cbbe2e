mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use commands::*;
use output::{emit, render, Format, Output};

const EXIT_DOMAIN: u8 = 1;
const EXIT_VERIFICATION: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "hardy-blowup", version, about = "Boundary blow-up solutions of -u'' - (mu/delta^2) u + u^p/delta^s = 0")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Characteristic roots, threshold and existence verdict.
    Regime(RegimeArgs),
    /// Barrier profiles: evaluation, sign verification, Keller-Osserman bound, residuals.
    #[command(subcommand)]
    Barrier(BarrierCommand),
    /// Integrate the shooting ODE leftward from rho.
    Shoot(ShootArgs),
    /// Blow-up radii and tail suprema over a decreasing list of slopes.
    Sweep(SweepArgs),
    /// Finite-difference solves: single BVP, sub/super pair, exhaustion.
    Solve(SolveArgs),
    /// Fit and classify sampled boundary behavior.
    Classify(ClassifyArgs),
    /// Run acceptance checks.
    Reproduce(ReproduceArgs),
}

#[derive(Subcommand)]
enum BarrierCommand {
    /// Values and linear residuals at given distances.
    Eval(BarrierEvalArgs),
    /// Check the claimed residual sign on a window (exit 2 on failure).
    Verify(BarrierVerifyArgs),
    /// Keller-Osserman super-solution amplitude.
    Ko(KoArgs),
    /// Residual of the equation for a given value and second derivative.
    Residual(ResidualArgs),
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct Io {
    /// JSON file with one parameter object, or an array of them for a batch.
    /// Flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(hardy_blowup::Error),
    Io(String),
}

impl From<hardy_blowup::Error> for CliError {
    fn from(e: hardy_blowup::Error) -> Self {
        CliError::Domain(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Domain(_) | CliError::Io(_) => EXIT_DOMAIN,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            CliError::Usage(m) => json!({ "error": "UsageError", "message": m }),
            CliError::Domain(e) => json!({ "error": e.kind(), "message": e.to_string() }),
            CliError::Io(m) => json!({ "error": "IoError", "message": m }),
        }
    }
}

/// Overlays the flags given on the command line onto a config entry.
fn merged<A: Serialize + DeserializeOwned>(cli: &A, entry: &Value) -> Result<A, CliError> {
    let Value::Object(mut base) = entry.clone() else {
        return Err(CliError::Usage("config entries must be JSON objects".into()));
    };
    let Value::Object(flags) = serde_json::to_value(cli).map_err(|e| CliError::Io(e.to_string()))? else {
        return Err(CliError::Io("arguments do not serialize to an object".into()));
    };
    if let Some(unknown) = base.keys().find(|k| !flags.contains_key(*k)) {
        return Err(CliError::Usage(format!("config: unknown key {unknown:?}")));
    }
    {
        for (k, v) in flags {
            if !(v.is_null() || v == Value::Bool(false)) {
                base.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| CliError::Usage(format!("config: {e}")))
}

fn entries<A: Serialize + DeserializeOwned + Clone>(args: &A, io: &Io) -> Result<(Vec<A>, bool), CliError> {
    let Some(path) = &io.config else {
        return Ok((vec![args.clone()], false));
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
    match doc {
        Value::Array(items) => Ok((items.iter().map(|e| merged(args, e)).collect::<Result<_, _>>()?, true)),
        single => Ok((vec![merged(args, &single)?], false)),
    }
}

/// Runs a command over its config entries in parallel, keeping input order.
fn run<A>(args: &A, io: &Io, exec: fn(&A) -> Result<Output, CliError>) -> Result<u8, CliError>
where
    A: Serialize + DeserializeOwned + Clone + Sync,
{
    let (items, batch) = entries(args, io)?;
    let outputs: Vec<Output> = items.par_iter().map(exec).collect::<Result<_, _>>()?;
    let bytes = render(&outputs, batch, io.format).map_err(|e| CliError::Io(e.to_string()))?;
    emit(&bytes, io.out.as_deref()).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(if outputs.iter().any(|o| o.verification_failed) { EXIT_VERIFICATION } else { 0 })
}

fn configure_threads() {
    if let Some(n) = std::env::var("HARDY_BLOWUP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Regime(a) => run(&a, &a.io.clone(), regime),
        Command::Barrier(BarrierCommand::Eval(a)) => run(&a, &a.io.clone(), barrier_eval),
        Command::Barrier(BarrierCommand::Verify(a)) => run(&a, &a.io.clone(), barrier_verify),
        Command::Barrier(BarrierCommand::Ko(a)) => run(&a, &a.io.clone(), barrier_ko),
        Command::Barrier(BarrierCommand::Residual(a)) => run(&a, &a.io.clone(), barrier_residual),
        Command::Shoot(a) => run(&a, &a.io.clone(), shoot),
        Command::Sweep(a) => run(&a, &a.io.clone(), sweep),
        Command::Solve(a) => run(&a, &a.io.clone(), solve),
        Command::Classify(a) => run(&a, &a.io.clone(), classify),
        Command::Reproduce(a) => run(&a, &a.io.clone(), reproduce),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_USAGE,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
