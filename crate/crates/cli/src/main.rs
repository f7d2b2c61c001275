//! `netwit`: reproduces the witness values and exports them as JSON/CSV.
//!
//! Exit codes: 0 success, 1 numerical or assertion failure, 2 input error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

#[derive(Parser)]
#[command(name = "netwit", version, about = "Classical-independence witness toolkit")]
struct Cli {
    /// Directory receiving outputs and `manifest.json`.
    #[arg(long, global = true, env = "NETWIT_OUT_DIR", default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the witness and independence test for a strategy.
    Reference(ReferenceArgs),
    /// Maximize the witness over deterministic hidden-variable models.
    ClassicalBound(ClassicalArgs),
    /// Witness against Werner visibility, plus the critical visibility.
    Sweep(SweepArgs),
    /// See-saw search over quantum strategies.
    Seesaw(SeesawArgs),
    /// Self-testing report for a strategy.
    Selftest(SelftestArgs),
    /// Write a built-in strategy as JSON.
    Export(ExportArgs),
}

#[derive(Args)]
pub struct ReferenceArgs {
    /// Strategy JSON; the built-in reference strategy if omitted.
    #[arg(long)]
    pub strategy: Option<PathBuf>,
    /// Operational-independence tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Args)]
pub struct ClassicalArgs {
    /// Also search all 4·2⁸·2⁸ unreduced strategies.
    #[arg(long)]
    pub exhaustive: bool,
    /// Restrict to operationally independent strategies.
    #[arg(long)]
    pub filter_oi: bool,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0.0)]
    pub vmin: f64,
    #[arg(long, default_value_t = 1.0)]
    pub vmax: f64,
    #[arg(long, default_value_t = 101)]
    pub steps: usize,
    /// Bisection tolerance for the critical visibility.
    #[arg(long, default_value_t = 1e-10)]
    pub bisect_tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FrozenEve {
    /// Computational basis of Eve's two qubits.
    Product,
}

#[derive(Args)]
pub struct SeesawArgs {
    /// SeesawConfig JSON; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Fail unless the best restart converged.
    #[arg(long)]
    pub require_converged: bool,
    #[arg(long, value_enum)]
    pub freeze_eve: Option<FrozenEve>,
    /// Start restart 0 from the reference strategy.
    #[arg(long)]
    pub from_reference: bool,
}

#[derive(Args)]
pub struct SelftestArgs {
    #[arg(long, conflicts_with = "werner")]
    pub strategy: Option<PathBuf>,
    /// Use two Werner sources of this visibility.
    #[arg(long)]
    pub werner: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Seed of the Bell-fidelity search.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fail unless the strategy is certified.
    #[arg(long)]
    pub require_certified: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum BuiltIn {
    Reference,
    BitExample,
    Werner,
}

#[derive(Args)]
pub struct ExportArgs {
    #[arg(value_enum)]
    pub which: BuiltIn,
    /// Visibility of both sources for `werner`.
    #[arg(long, default_value_t = 1.0)]
    pub v: f64,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn numeric(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<netwit_core::Error> for CliError {
    fn from(e: netwit_core::Error) -> Self {
        use netwit_core::Error as E;
        match e {
            E::Config(_) | E::Schema(_) | E::Io(_) | E::Precondition(_) => CliError::input(e.to_string()),
            E::Validation(_) => CliError::numeric(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Reference(a) => commands::reference(&cli.out, a),
        Command::ClassicalBound(a) => commands::classical_bound(&cli.out, a),
        Command::Sweep(a) => commands::sweep(&cli.out, a),
        Command::Seesaw(a) => commands::seesaw(&cli.out, a),
        Command::Selftest(a) => commands::selftest(&cli.out, a),
        Command::Export(a) => commands::export(&cli.out, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
