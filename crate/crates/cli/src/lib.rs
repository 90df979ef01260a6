//! Command-line driver: config parsing, command dispatch and output.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::{parse_config, ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] ncphase_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_domain_violation() => 3,
            CliError::Config(ConfigError::Params(e)) if e.is_domain_violation() => 3,
            _ => 2,
        }
    }
}

pub const EXIT_PASS: u8 = 0;
pub const EXIT_CHECKS_FAILED: u8 = 1;
pub const EXIT_DOMAIN: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ncphase",
    version,
    about = "Noncommutative phase-space verification and flow runs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the verification suite and write a JSON report.
    Verify(VerifyArgs),
    /// Integrate the geodesic flow from one point and write CSV.
    Flow(FlowArgs),
    /// Map a point to canonical coordinates, or back with --inverse.
    Transform(TransformArgs),
    /// Sweep the active parameters over a grid and write CSV.
    Scan(ScanArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FlowOverrides {
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 4)]
    pub lmax: usize,
    #[command(flatten)]
    pub flow: FlowOverrides,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec4)]
    pub q: [f64; 4],
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec4)]
    pub p: [f64; 4],
    #[arg(long, default_value_t = 4)]
    pub lmax: usize,
    #[command(flatten)]
    pub flow: FlowOverrides,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Original positions, or Q with --inverse.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec4)]
    pub q: [f64; 4],
    /// Original momenta, or P with --inverse.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec4)]
    pub p: [f64; 4],
    #[arg(long)]
    pub inverse: bool,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "max-cells", default_value_t = 10_000)]
    pub max_cells: usize,
    #[arg(long, default_value_t = 4)]
    pub lmax: usize,
    #[command(flatten)]
    pub flow: FlowOverrides,
}

pub fn parse_vec4(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!(
            "expected 4 comma-separated numbers, got {}",
            parts.len()
        ));
    }
    let mut out = [0.0; 4];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("invalid number `{p}`"))?;
    }
    Ok(out)
}

pub fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Verify(a) => commands::verify(&a),
        Command::Flow(a) => commands::flow(&a),
        Command::Transform(a) => commands::transform(&a),
        Command::Scan(a) => commands::scan(&a),
    }
}

pub fn main_exit(cli: Cli) -> ExitCode {
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
