//! `dsd`: driver decomposition and decarbonization reports for residential
//! building carbon intensity.
//!
//! Exit codes: 0 on success, 2 on input/validation problems, 3 when the
//! numerical core fails (singular response system).

mod commands;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "dsd",
    version,
    about = "Decompose residential building carbon intensity into its drivers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Attribute intensity changes to drivers, yearly and per stage
    Decompose {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Cross-validate the decomposition against the log-mean oracle
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Decarbonization at six scales: totals, efficiency, per household,
    /// per capita, per floor area, per expenditure
    Metrics {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Project avoided emissions from electrification improvements
    Scenario(ScenarioArgs),
}

/// Output formats. `csv` is always written; the other two add artifacts.
#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    /// CSV plus one-to-one JSON mirrors
    Json,
    /// CSV plus SVG charts (where the command produces any)
    Svg,
}

#[derive(Args, Clone)]
pub struct InputArgs {
    /// Data CSV (one row per year)
    #[arg(long)]
    pub input: PathBuf,
    /// Sidecar manifest describing the file
    #[arg(long)]
    pub manifest: PathBuf,
    /// Country id; must match the manifest when given
    #[arg(long)]
    pub country: Option<String>,
    /// Output directory, created if needed
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Clone)]
pub struct RangeArgs {
    /// First year of the analysis horizon (default: first year on file)
    #[arg(long)]
    pub from: Option<i32>,
    /// Last year of the analysis horizon (default: last year on file)
    #[arg(long)]
    pub to: Option<i32>,
    /// Euler segments per decomposed period
    #[arg(long, env = "DSD_SEGMENTS", default_value_t = dsd_core::dsd::DEFAULT_SEGMENTS)]
    pub segments: usize,
    /// Stage windows, e.g. "2000-2005,2005-2010" (default: one full-range stage)
    #[arg(long)]
    pub stages: Option<String>,
}

#[derive(Args)]
pub struct ScenarioArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Key-value parameter file; flags below override individual keys
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Base year for the extrapolation (default: last year on file)
    #[arg(long)]
    pub base_year: Option<i32>,
    #[arg(long)]
    pub horizon_year: Option<i32>,
    /// Million households at the horizon
    #[arg(long)]
    pub households_target: Option<f64>,
    /// Fractional growth of energy per household per year
    #[arg(long)]
    pub energy_growth: Option<f64>,
    #[arg(long)]
    pub elec_rate_base: Option<f64>,
    #[arg(long)]
    pub elec_rate_target: Option<f64>,
    /// Electricity emission factor at base, kgCO2/kgce
    #[arg(long)]
    pub k_elec_base: Option<f64>,
    /// Electricity emission factor at horizon, kgCO2/kgce
    #[arg(long)]
    pub k_elec_target: Option<f64>,
    /// Emission factor of the non-electric remainder, kgCO2/kgce
    #[arg(long)]
    pub k_primary: Option<f64>,
    #[arg(long)]
    pub thermal_share_base: Option<f64>,
    #[arg(long)]
    pub thermal_share_target: Option<f64>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Decompose { input, range } => commands::decompose(input, range),
        Command::Compare { input, range } => commands::compare(input, range),
        Command::Metrics { input, range } => commands::metrics(input, range),
        Command::Scenario(args) => commands::scenario(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let numerical = err
                .downcast_ref::<dsd_core::Error>()
                .map(dsd_core::Error::is_numerical)
                .unwrap_or(false);
            ExitCode::from(if numerical { 3 } else { 2 })
        }
    }
}
