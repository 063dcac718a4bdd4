use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use illiquid_core::attenuation::ShockPolicy;
use illiquid_core::regime::ModelKind;

use crate::config::StateEncoding;
use crate::formats::OutputFormat;
use crate::ingest::{DateFormat, RowOrder};

#[derive(Debug, Parser)]
#[command(name = "illiquid", version, about = "Markov-modulated price models for illiquid daily closes")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Master seed for every random stream.
    #[arg(long, global = true, env = "ILLIQUID_SEED")]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    pub output_dir: PathBuf,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// TOML file with defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for forecasts and studies (0 = all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a CSV export into a canonical ascending series.
    Ingest(IngestArgs),
    /// Collapse consecutive repeated closes.
    Clean(SeriesArg),
    /// Forward-fill onto weekdays and keep one weekday.
    Resample(ResampleArgs),
    /// Fit a model on a window and write its parameters.
    Calibrate(CalibrateArgs),
    /// Simulate free-running paths from calibrated parameters and score them.
    Forecast(ForecastArgs),
    /// MAPE and two-sample KS for forecast files.
    Evaluate(EvaluateArgs),
    /// Rolling-window correlation between two series.
    Correlate(CorrelateArgs),
    /// Correlation attenuation of two modulated gBm legs over a (p, q) grid.
    AttenuationStudy(StudyArgs),
    /// Histogram of log-returns against the fitted normal density.
    PdfCompare(PdfArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub date_column: Option<String>,
    #[arg(long)]
    pub price_column: Option<String>,
    /// `mdy`, `ymd`, or a strftime pattern.
    #[arg(long, value_parser = clap::value_parser!(DateFormat))]
    pub date_format: Option<DateFormat>,
    #[arg(long, value_enum)]
    pub order: Option<RowOrder>,
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Output file stem (defaults to the input's).
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct SeriesArg {
    pub series: PathBuf,
}

#[derive(Debug, Args)]
pub struct ResampleArgs {
    pub series: PathBuf,
    #[arg(long)]
    pub weekday: Option<String>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    pub series: PathBuf,
    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub start: Option<NaiveDate>,
    #[arg(long)]
    pub end: Option<NaiveDate>,
    /// Step length used by the mean-reverting model.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, value_enum)]
    pub state_encoding: Option<StateEncoding>,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    /// Parameter file written by `calibrate`.
    pub params: PathBuf,
    /// Series holding the realised prices after the calibration window.
    pub actuals: PathBuf,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub n_sims: Option<usize>,
    /// Divergence bound as a multiple of the starting price.
    #[arg(long)]
    pub ceiling: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(required = true)]
    pub forecasts: Vec<PathBuf>,
    /// Take actual prices from this series instead of the files' `actual` column.
    #[arg(long)]
    pub actuals: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub windows: Option<Vec<usize>>,
    #[arg(long)]
    pub weekday: Option<String>,
    /// Correlate forward-filled daily values instead of one weekday per week.
    #[arg(long)]
    pub daily: bool,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// Cells as `p:q`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<String>>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub s0: Option<f64>,
    #[arg(long, value_parser = parse_policy)]
    pub policy: Option<ShockPolicy>,
}

#[derive(Debug, Args)]
pub struct PdfArgs {
    pub series: PathBuf,
    #[arg(long)]
    pub bins: Option<usize>,
}

fn parse_policy(s: &str) -> Result<ShockPolicy, String> {
    match s {
        "aligned" => Ok(ShockPolicy::Aligned),
        "queued" => Ok(ShockPolicy::Queued),
        _ => Err(format!("unknown policy `{s}` (aligned or queued)")),
    }
}
