//! `nugget-gp`: fit, profile and emulate one-dimensional GP models, and
//! regenerate the nugget study data as CSV.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nugget_gp::simulation::AmplitudeConvention;
use nugget_gp::{Family, Model};

#[derive(Parser)]
#[command(name = "nugget-gp", version, about = "Gaussian-process likelihood with and without a nugget term")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximum-likelihood fit; prints JSON.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Profile log-likelihood on a log grid; CSV `psi,L,flag`.
    Profile {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Data behind figure 1, 2, 3 or 4, written as CSV files into a directory.
    Figure {
        id: u32,
        #[command(flatten)]
        grid: GridArgs,
        /// Output directory (default `./figure<id>`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo study of the estimators for τ ∈ {0, 0.01} × ν ∈ {0, 0.01, 0.02}.
    Table1 {
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "std_dev", value_parser = parse_convention)]
        amplitude_convention: AmplitudeConvention,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Meta-model and interpolating predictions; CSV `x,m_nu,m_interp`.
    Predict {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Correlation length, or `auto` to fit it first.
        #[arg(long, default_value = "auto")]
        psi: String,
        /// Comma-separated query inputs.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        query: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// 2-norm condition number of the correlation matrix at a given ψ; prints JSON.
    Condition {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        psi: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
pub struct DataArgs {
    /// CSV file with header `x,y`.
    #[arg(conflicts_with = "model")]
    pub input: Option<PathBuf>,
    /// Builtin model on an equidistant grid instead of an input file.
    #[arg(long, value_parser = parse_model)]
    pub model: Option<Model>,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
}

#[derive(Args, Clone)]
pub struct KernelArgs {
    #[arg(long, default_value = "gaussian", value_parser = parse_family)]
    pub family: Family,
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
}

#[derive(Args, Clone)]
pub struct GridArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub psi_min: f64,
    #[arg(long, default_value_t = 1e4)]
    pub psi_max: f64,
    #[arg(long, default_value_t = 400)]
    pub grid: usize,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: nugget_gp::GpError| e.to_string())
}

fn parse_model(s: &str) -> Result<Model, String> {
    s.parse().map_err(|e: nugget_gp::GpError| e.to_string())
}

fn parse_convention(s: &str) -> Result<AmplitudeConvention, String> {
    s.parse().map_err(|e: nugget_gp::GpError| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit { data, kernel, grid, out } => commands::fit(&data, &kernel, &grid, out.as_deref()),
        Command::Profile { data, kernel, grid, out } => commands::profile(&data, &kernel, &grid, out.as_deref()),
        Command::Figure { id, grid, out } => commands::figure(id, &grid, out),
        Command::Table1 { replicates, seed, amplitude_convention, out } => {
            commands::table1(replicates, seed, amplitude_convention, out.as_deref())
        }
        Command::Predict { data, kernel, grid, psi, query, out } => {
            commands::predict(&data, &kernel, &grid, &psi, &query, out.as_deref())
        }
        Command::Condition { data, kernel, psi, out } => commands::condition(&data, &kernel, psi, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
