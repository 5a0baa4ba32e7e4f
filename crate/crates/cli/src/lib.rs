//! Command-line front end for the alphari solver.
//!
//! Exit codes: `0` on success, `1` on malformed input, `2` when a solve is
//! uncertified or a rule fails its optimality check.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod commands;
pub mod files;

pub use files::{ProblemFile, SolutionFile};

/// Environment variable capping the worker threads of `sweep`.
pub const THREADS_ENV: &str = "ALPHARI_THREADS";

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or schema-invalid input; exit code 1.
    Input(String),
    /// Solver or certificate failure; exit code 2.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Failed(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) | CliError::Failed(msg) => f.write_str(msg),
        }
    }
}

impl From<alphari::Error> for CliError {
    fn from(e: alphari::Error) -> Self {
        match e {
            alphari::Error::InvalidInput { .. } | alphari::Error::Domain { .. } => {
                CliError::Input(e.to_string())
            }
            other => CliError::Failed(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "alphari",
    version,
    about = "Rational inattention with alpha-divergence information costs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem file and write the solution as JSON.
    Solve {
        problem: PathBuf,
        /// Write the solution here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Check a choice rule against the optimality conditions.
    Check {
        problem: PathBuf,
        /// JSON file with a `rule` matrix; solution files qualify.
        rule: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        alpha_override: Option<f64>,
        /// Absolute tolerance of the certificate.
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Solve at several alphas and write one CSV row per alpha.
    Sweep {
        problem: PathBuf,
        /// Comma-separated alpha values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        alphas: Vec<f64>,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Alpha-divergence between two comma-separated distributions.
    Divergence {
        #[arg(allow_hyphen_values = true)]
        p: String,
        #[arg(allow_hyphen_values = true)]
        m: String,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
    },
    /// Alpha-information and alpha-integration of a choice rule.
    Info {
        problem: PathBuf,
        rule: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        alpha_override: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Replace the alpha given in the problem file.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha_override: Option<f64>,
    /// Seed of the random restarts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of random restarts.
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    /// Absolute tolerance of the optimality certificate.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// How residual mass is split among tied payoff maximizers.
    #[arg(long, default_value = "uniform")]
    pub tie_rule: alphari::TieRule,
}

impl SolverArgs {
    pub fn config(&self) -> alphari::SolveConfig {
        alphari::SolveConfig {
            rng_seed: self.seed,
            restarts: self.restarts,
            certificate_tol: self.tol,
            tie_rule: self.tie_rule,
            ..alphari::SolveConfig::default()
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
///
/// Returns the process exit code. Results go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let mut warnings = Vec::new();
    let result = commands::execute(cli.command, out, &mut warnings);
    for w in &warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
