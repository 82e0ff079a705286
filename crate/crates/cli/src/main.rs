//! `fracsys`: regime classification, parameter atlases and discrete solves
//! for coupled fractional singular systems.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use settings::Settings;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] fracsys_core::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    fn other(e: impl std::fmt::Display) -> Self {
        Self::Other(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        use fracsys_core::Error as E;
        match self {
            Self::Usage(_) => 2,
            Self::Core(E::NoConvergence { .. }) => 3,
            Self::Core(E::RegimeRefusal(_) | E::HypothesisNotMet(_)) => 4,
            Self::Core(E::InvalidArgument(_) | E::Domain(_)) => 2,
            Self::Core(_) | Self::Other(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "fracsys", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify an exponent set (existence, nonexistence, uniqueness, rates)
    Classify(Flags),
    /// Sweep two exponents over a grid and emit one verdict per cell
    Atlas(Flags),
    /// Principal eigenpair, torsion function and boundary constants
    Eigen(Flags),
    /// Solve the scalar problem (-Δ)^s u = coeff d^-gamma u^-p
    SolveScalar(Flags),
    /// Solve the coupled system inside a calibrated bracket
    SolveSystem(Flags),
    /// Solve the coupled system from both ends of the bracket and compare
    ProbeUniqueness(Flags),
}

/// Every flag may also be given as `key = value` in the config file; flags
/// take precedence.
#[derive(clap::Args, Debug, Default)]
struct Flags {
    /// Config file with `key = value` lines and `#` comments
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    t: Option<String>,
    /// Weight exponent of the scalar problem
    #[arg(long)]
    gamma: Option<String>,
    /// Weight amplitude of the scalar problem [default: 1]
    #[arg(long)]
    coeff: Option<String>,
    /// Left end of the interval [default: -1]
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    /// Right end of the interval [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    /// Number of interior nodes [default: 1024]
    #[arg(long)]
    n: Option<String>,
    /// Outer (system) tolerance [default: 1e-8]
    #[arg(long)]
    outer_tol: Option<String>,
    /// Inner (scalar and eigen) tolerance [default: 1e-10]
    #[arg(long)]
    inner_tol: Option<String>,
    #[arg(long)]
    max_outer: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    /// Seed for randomized checks [default: 0]
    #[arg(long)]
    seed: Option<String>,
    /// First swept parameter (p, q, r, theta, s, t)
    #[arg(long)]
    param1: Option<String>,
    /// Range of the first parameter as lo:hi
    #[arg(long, allow_hyphen_values = true)]
    range1: Option<String>,
    /// Steps of the first parameter [default: 50]
    #[arg(long)]
    steps1: Option<String>,
    #[arg(long)]
    param2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    range2: Option<String>,
    #[arg(long)]
    steps2: Option<String>,
    /// Output file [default: stdout]
    #[arg(long)]
    output: Option<String>,
    /// json or csv
    #[arg(long)]
    format: Option<String>,
    /// Also write the computed functions as CSV to this file
    #[arg(long)]
    csv_output: Option<String>,
}

impl Flags {
    fn settings(self) -> Result<Settings, CliError> {
        let mut settings = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        settings.override_with([
            ("p", self.p),
            ("q", self.q),
            ("r", self.r),
            ("theta", self.theta),
            ("s", self.s),
            ("t", self.t),
            ("gamma", self.gamma),
            ("coeff", self.coeff),
            ("a", self.a),
            ("b", self.b),
            ("n", self.n),
            ("outer_tol", self.outer_tol),
            ("inner_tol", self.inner_tol),
            ("max_outer", self.max_outer),
            ("max_iter", self.max_iter),
            ("seed", self.seed),
            ("param1", self.param1),
            ("range1", self.range1),
            ("steps1", self.steps1),
            ("param2", self.param2),
            ("range2", self.range2),
            ("steps2", self.steps2),
            ("output", self.output),
            ("format", self.format),
            ("csv_output", self.csv_output),
        ]);
        Ok(settings)
    }
}

fn write_to(path: &str, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Other(format!("cannot write {path}: {e}")))
}

fn print_stdout(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", text.trim_end()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::other(e)),
        _ => Ok(()),
    }
}

type Runner = fn(&Settings) -> Result<commands::Outcome, CliError>;

fn run(command: Command) -> Result<bool, CliError> {
    let (flags, runner, name): (Flags, Runner, &str) = match command {
        Command::Classify(f) => (f, commands::classify_cmd, "classify"),
        Command::Atlas(f) => (f, commands::atlas_cmd, "atlas"),
        Command::Eigen(f) => (f, commands::eigen_cmd, "eigen"),
        Command::SolveScalar(f) => (f, commands::solve_scalar_cmd, "solve-scalar"),
        Command::SolveSystem(f) => (f, commands::solve_system_cmd, "solve-system"),
        Command::ProbeUniqueness(f) => (f, commands::probe_uniqueness_cmd, "probe-uniqueness"),
    };
    let settings = flags.settings()?;
    if settings.has("csv_output") && matches!(name, "classify" | "atlas") {
        return Err(CliError::Usage(format!("key 'csv_output' is not supported by {name}")));
    }
    let outcome = runner(&settings)?;
    match settings.str("output") {
        Some(path) => write_to(path, &outcome.body)?,
        None => print_stdout(&outcome.body)?,
    }
    if let (Some(path), Some(dump)) = (settings.str("csv_output"), outcome.dump.as_deref()) {
        write_to(path, dump)?;
    }
    Ok(outcome.converged)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("fracsys: solver did not converge");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("fracsys: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
