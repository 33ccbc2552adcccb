//! The `asmd` command-line front end.
//!
//! ```text
//! asmd generate --example {1,2,fts,simplex} --n N --m M [--N K] [--dist D] [--seed S] [--out FILE]
//! asmd solve    INSTANCE [--alg A] [--eps E] [--seed S] [--x0 X] [--cap C] [--allow-cap] [--exact] [--trace FILE] [--result FILE]
//! asmd bench    (--manifest FILE | --instance FILE --eps LIST --seeds LIST ...) [--jobs J]
//! asmd verify   --instance FILE --result FILE [--lemma1] [--seeds K] [--resolution R] [--json]
//! ```
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 iteration cap.

pub mod bench;
pub mod commands;
pub mod error;
pub mod records;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::{exit, CliError, CliResult};

/// Environment variable naming the base directory for default outputs.
pub const OUT_DIR_ENV: &str = "ASMD_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "asmd", version, about = "Adaptive stochastic mirror descent experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a benchmark instance file.
    Generate(GenerateArgs),
    /// Run one algorithm on an instance and print a CSV row.
    Solve(SolveArgs),
    /// Run algorithm × ε × seed grids and write tables.
    Bench(BenchArgs),
    /// Audit a result file against its instance.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Instance family: 1, 2, fts or simplex.
    #[arg(long)]
    pub example: String,
    /// Dimension of x.
    #[arg(long = "n")]
    pub n: usize,
    /// Number of constraints.
    #[arg(long = "m")]
    pub m: usize,
    /// Number of summands in the objective (not used by simplex).
    #[arg(long = "N")]
    pub summands: Option<usize>,
    /// Entry distribution: gumbel, exponential or uniform (not used by fts).
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output file; defaults to `$ASMD_OUT_DIR/instances/<auto-name>.prob`
    /// (or `./instances/...`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance file (`.prob`).
    pub instance: PathBuf,
    /// standard or modified.
    #[arg(long, default_value = "modified")]
    pub alg: String,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Start point: uniform-norm, origin or center. Defaults to the instance's own.
    #[arg(long)]
    pub x0: Option<String>,
    /// Override Θ₀ (must not be below the setup's value).
    #[arg(long)]
    pub theta0: Option<f64>,
    /// Iteration cap; the default is ten times the theoretical bound.
    #[arg(long)]
    pub cap: Option<u64>,
    /// Exit 0 even when the cap stops the run.
    #[arg(long)]
    pub allow_cap: bool,
    /// Use exact subgradients (deterministic run).
    #[arg(long)]
    pub exact: bool,
    /// Write the per-step trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the full result as JSON (input to `verify`).
    #[arg(long)]
    pub result: Option<PathBuf>,
    /// Keep every iterate in the result file (needed by `verify --lemma1`).
    #[arg(long)]
    pub iterates: bool,
    /// Record f(x^k) on every step of the trace.
    #[arg(long)]
    pub record_objective: bool,
    /// Omit the CSV header line.
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON manifest; other grid flags are then ignored.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Instance file (required without a manifest).
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Comma-separated algorithms.
    #[arg(long, default_value = "standard,modified")]
    pub alg: String,
    /// Comma-separated ε values; fractions such as 1/64 are accepted.
    #[arg(long, default_value = "0.05")]
    pub eps: String,
    /// Seeds as a list and/or half-open ranges, e.g. `0..10` or `1,2,5`.
    #[arg(long, default_value = "0..10")]
    pub seeds: String,
    /// Output directory; defaults to `$ASMD_OUT_DIR/bench/<instance-file-stem>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Runs per (algorithm, ε, seed) cell.
    #[arg(long, default_value_t = 1)]
    pub repeat: u32,
    /// Write a trace CSV per cell under `<out>/traces/`.
    #[arg(long)]
    pub trace: bool,
    /// Use exact subgradients.
    #[arg(long)]
    pub exact: bool,
    /// Start point: uniform-norm, origin or center.
    #[arg(long)]
    pub x0: Option<String>,
    /// Iteration cap per run; capped cells are reported with status `cap`.
    #[arg(long)]
    pub cap: Option<u64>,
    /// Override Θ₀.
    #[arg(long)]
    pub theta0: Option<f64>,
    /// Cells run concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Instance file the result was produced from.
    #[arg(long)]
    pub instance: PathBuf,
    /// Result JSON written by `solve --result`.
    #[arg(long)]
    pub result: PathBuf,
    /// Audit the per-step descent inequality (needs `solve --exact --iterates`).
    #[arg(long)]
    pub lemma1: bool,
    /// Re-run the result's configuration over seeds 0..K and audit the mean gap.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Grid intervals per axis for the reference optimum.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Target grid slack when no resolution is given.
    #[arg(long, default_value_t = 0.01)]
    pub slack: f64,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Errors are printed to stderr.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match commands::dispatch(cli.command, &mut stdout) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("asmd: {e}");
            e.exit_code()
        }
    }
}
