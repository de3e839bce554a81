//! Command-line surface. Five subcommands cover the experiment loop:
//! `model` writes synthetic velocity structures, `forward` simulates
//! observed data, `invert` runs a configured inversion, `bilinear` checks
//! pointwise model recovery from one wavefield, and `report` summarizes
//! iteration logs.
//!
//! All errors leave through a single one-line stderr prefix `wipr: error:`;
//! exit codes are 0 (success), 1 (runtime failure), 2 (usage).

mod commands;
mod config;

pub use config::{pair_axes, parse_float_list, parse_index_list, ExperimentConfig};

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "wipr",
    version,
    about = "Frequency-domain waveform inversion with wavefield reconstruction and phase retrieval"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic velocity model
    Model(ModelArgs),
    /// Simulate observed data for a model and acquisition
    Forward(ForwardArgs),
    /// Run an inversion experiment from a config file
    Invert(InvertArgs),
    /// Recover a model pointwise from a single wavefield and report errors
    Bilinear(BilinearArgs),
    /// Summarize iteration logs as a CSV table
    Report(ReportArgs),
}

#[derive(Args)]
pub struct ModelArgs {
    /// homogeneous, layered, or inclusion
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub nx: usize,
    #[arg(long)]
    pub nz: usize,
    /// Cell size in meters
    #[arg(long)]
    pub h: f64,
    /// Velocities in m/s (comma-separated where several are needed)
    #[arg(long, value_delimiter = ',', required = true)]
    pub v: Vec<f64>,
    /// Layer interface depths as z indices (layered only)
    #[arg(long)]
    pub interfaces: Option<String>,
    /// Anomaly box as x0,x1,z0,z1 inclusive indices (inclusion only)
    #[arg(long)]
    pub rect: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a grayscale velocity image here
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct ForwardArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Hz; comma list and start:step:stop ranges accepted
    #[arg(long)]
    pub frequencies: String,
    #[arg(long)]
    pub sources_x: String,
    #[arg(long)]
    pub sources_z: String,
    #[arg(long)]
    pub receivers_x: String,
    #[arg(long)]
    pub receivers_z: String,
    /// impulse or ricker:PEAK_HZ
    #[arg(long, default_value = "impulse")]
    pub signature: String,
    #[arg(long, default_value_t = 10)]
    pub pml_thickness: usize,
    #[arg(long, default_value_t = 6.0)]
    pub pml_amplitude: f64,
    /// Mass-term center weight in (0, 1]; 1 is the plain stencil
    #[arg(long, default_value_t = 1.0)]
    pub mass_center: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct InvertArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed key of the config file
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the emit_images key of the config file
    #[arg(long)]
    pub emit_images: Option<bool>,
}

#[derive(Args)]
pub struct BilinearArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Source frequency in Hz
    #[arg(long)]
    pub freq: f64,
    #[arg(long)]
    pub source_x: usize,
    #[arg(long)]
    pub source_z: usize,
    #[arg(long, default_value_t = 10)]
    pub pml_thickness: usize,
    #[arg(long, default_value_t = 6.0)]
    pub pml_amplitude: f64,
    /// Interior margin in cells; defaults to pml_thickness + 1
    #[arg(long)]
    pub margin: Option<usize>,
    /// Mask nodes where |u| falls below this fraction of max |u|
    #[arg(long, default_value_t = 1e-6)]
    pub threshold: f64,
    /// Use only wavefield and source magnitudes for the written model
    #[arg(long)]
    pub magnitude_only: bool,
    /// Write the recovered squared-slowness model here
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Iteration CSV files, one summary row each
    #[arg(required = true)]
    pub logs: Vec<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Collapses a clap error to one line: message lines up to the usage block,
/// joined, with the leading "error: " stripped.
fn one_line(e: &clap::Error) -> String {
    let rendered = e.to_string();
    let mut parts = Vec::new();
    for line in rendered.lines() {
        let t = line.trim();
        if t.is_empty() {
            break;
        }
        parts.push(t);
    }
    let joined = parts.join(" ");
    joined.strip_prefix("error: ").unwrap_or(&joined).to_string()
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprintln!("wipr: error: {}", one_line(&e));
                    2
                }
            }
        }
    };
    let result = match &cli.command {
        Command::Model(a) => commands::cmd_model(a),
        Command::Forward(a) => commands::cmd_forward(a),
        Command::Invert(a) => commands::cmd_invert(a),
        Command::Bilinear(a) => commands::cmd_bilinear(a),
        Command::Report(a) => commands::cmd_report(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("wipr: error: {e}");
            1
        }
    }
}
