use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use muhankel::{Error, ErrorKind};
use serde::Serialize;

mod commands;
mod output;
mod parse;

#[derive(Parser, Debug)]
#[command(name = "muhankel", version, about = "Weighted block Hankel operators on truncated duals")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, default_value = "muhankel-out")]
    pub out_dir: PathBuf,
    /// Format of tabular outputs that have both forms.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate a truncated dual.
    #[command(allow_negative_numbers = true)]
    Catalog(commands::CatalogArgs),
    /// Write a seeded random symbol.
    #[command(allow_negative_numbers = true)]
    RandomSymbol(commands::RandomSymbolArgs),
    /// Write the circle symbol a(n, m) = φ̂(n + m) on n, m >= 0.
    #[command(allow_negative_numbers = true)]
    FourierSymbol(commands::FourierSymbolArgs),
    /// Export the dense operator matrix.
    #[command(allow_negative_numbers = true)]
    Assemble(commands::OperatorArgs),
    /// Singular values, Schatten norms and boundedness/compactness criteria.
    #[command(allow_negative_numbers = true)]
    Spectrum(commands::SpectrumArgs),
    /// Schatten-membership series on a factor-2 ladder of SU(2) cutoffs.
    #[command(allow_negative_numbers = true)]
    SchattenScan(commands::ScanArgs),
    /// Determinant-sign index, numerical index and (for circle symbols) winding number.
    #[command(allow_negative_numbers = true)]
    Index(commands::IndexArgs),
    /// Singular triples of the operator with block attribution.
    #[command(allow_negative_numbers = true)]
    Forward(commands::OperatorArgs),
    /// Recover a symbol from spectral data.
    #[command(allow_negative_numbers = true)]
    Recover(commands::RecoverArgs),
    /// Recovery error against noise level with alpha = delta^2.
    #[command(allow_negative_numbers = true)]
    Stability(commands::StabilityArgs),
}

/// Exit statuses: validation 2, numerical 3, index inapplicable 4, attribution 5.
fn exit_status(err: &Error) -> u8 {
    match err.kind() {
        ErrorKind::Validation | ErrorKind::Io => 2,
        ErrorKind::Numerical => 3,
        ErrorKind::IndexInapplicable => 4,
        ErrorKind::Attribution => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = &cli.common;
    let result = match &cli.command {
        Command::Catalog(a) => commands::catalog(c, a),
        Command::RandomSymbol(a) => commands::random_symbol(c, a),
        Command::FourierSymbol(a) => commands::fourier_symbol(c, a),
        Command::Assemble(a) => commands::assemble(c, a),
        Command::Spectrum(a) => commands::spectrum(c, a),
        Command::SchattenScan(a) => commands::schatten_scan(c, a),
        Command::Index(a) => commands::index(c, a),
        Command::Forward(a) => commands::forward(c, a),
        Command::Recover(a) => commands::recover(c, a),
        Command::Stability(a) => commands::stability(c, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Unattributed { .. }) {
                eprintln!(
                    "hint: exact recovery needs blocks on disjoint rows and columns \
                     (a partial matching) with well-separated singular values"
                );
            }
            ExitCode::from(exit_status(&e))
        }
    }
}
